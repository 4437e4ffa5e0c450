//! Finite atomic signed measures: Hahn decomposition, the Jordan pair,
//! total variation, and normalization to a probability measure.
//!
//! Run with: cargo run --example decompose_measure

use dualglm::measure::{
    finite_subcover, hahn_decompose, jordan_decompose, normalize, total_variation, SignedMeasure,
    Weight,
};

fn main() {
    // a measure with mixed-sign atoms, built programmatically
    let m = SignedMeasure::from_finite(vec![
        ("a", 2.0),
        ("b", -0.5),
        ("c", 1.25),
        ("d", -3.0),
        ("e", 0.0),
    ])
    .expect("valid measure");

    let hahn = hahn_decompose(&m);
    println!("Hahn positive set (atom indices): {:?}", hahn.positive_set);
    println!("Hahn negative set (atom indices): {:?}", hahn.negative_set);

    let jordan = jordan_decompose(&m);
    println!("\nJordan pair:");
    println!("  nu+ total = {:?}", jordan.nu_plus.total());
    println!("  nu- total = {:?}", jordan.nu_minus.total());
    println!("total variation = {:?}", total_variation(&m));

    let prob = normalize(&m).expect("finite nonzero total variation");
    let mass: f64 = prob.atoms.iter().map(|(_, w)| w).sum();
    println!("normalized masses sum to {mass}");

    // the same measure can carry one infinite sign; the finite subcover
    // picks out the atoms with finite weight
    let with_inf = SignedMeasure::new(vec![
        ("x", Weight::Finite(1.0)),
        ("y", Weight::PosInf),
        ("z", Weight::Finite(-2.0)),
    ])
    .expect("one sign of infinity is allowed");
    let cover = finite_subcover(
        &with_inf
            .atoms()
            .iter()
            .map(|(_, w)| *w)
            .collect::<Vec<_>>(),
    );
    println!("\nfinite subcover of {{1, +inf, -2}}: indices {cover:?}");

    // the tab-separated text format round trips, including infinities
    let text = "up\t3.5\ndown\t-1.25\nspike\tinf\n";
    let parsed = SignedMeasure::from_text(text).expect("parses");
    println!("\nparsed from text:\n{}", parsed.to_text());
}
