//! Path-wise convergence study: nested sample paths, sup-tail errors, and
//! the convergence fraction across replications.
//!
//! Run with: cargo run --example convergence_study

use dualglm::dgp::{DgpSpec, ErrorFamily};
use dualglm::estimators::{EstimatorTag, SolverConfig};
use dualglm::harness::{run_path, run_study, save_study, ErrorNorm};

fn main() {
    let dgp = DgpSpec::iid_binary(vec![0.0, 1.0], ErrorFamily::Logistic);
    let sizes = [128, 256, 512, 1024, 2048];
    let cfg = SolverConfig::default();

    // a single nested path: one fit per size, sup-tail computed backward
    let trace = run_path(&dgp, EstimatorTag::Mle, &sizes, 1, ErrorNorm::LInf, &cfg)
        .expect("valid sizes");
    println!("single path (mle), seed 1:");
    println!("  n      error     sup_tail");
    for i in 0..sizes.len() {
        println!(
            "  {:<6} {:.4}    {:.4}",
            trace.sample_sizes[i],
            trace.errors[i].unwrap_or(f64::NAN),
            trace.sup_tail[i].unwrap_or(f64::NAN),
        );
    }
    println!("  invariants hold: {}", trace.check_invariants());

    // a small grid study: two estimators on the same DGP
    let grid = vec![
        (dgp.clone(), EstimatorTag::Mle),
        (dgp.clone(), EstimatorTag::DualMeasure),
    ];
    let study = run_study(&grid, &sizes, 20, 99, ErrorNorm::LInf, &cfg).expect("valid grid");
    println!("\nstudy: {} traces", study.traces.len());
    for n in sizes {
        println!(
            "  convergence_fraction({n:>4}, 0.15) = {:.2}",
            study.convergence_fraction(n, 0.15)
        );
    }

    let out = std::env::temp_dir().join("dualglm_example_study");
    save_study(&study, &out).expect("writable temp dir");
    println!("\npersisted study.csv and per-trace JSON under {}", out.display());
}
