//! Separation: the pathology where a hyperplane splits the outcomes
//! perfectly and the maximum-likelihood coefficients run off to infinity.
//! The estimators surface it as a typed error carrying a diagnostic
//! report instead of returning a huge, meaningless fit.
//!
//! Run with: cargo run --example separation_diagnostics

use dualglm::dgp::{Dataset, Provenance};
use dualglm::estimators::{fit_mle, FitError, SolverConfig};
use dualglm::link::{diagnose_separation, LinkSpec};
use nalgebra::DMatrix;

fn main() {
    // x = -2, -1 produce y = 0; x = 1, 2 produce y = 1: perfectly separated
    let d = Dataset {
        x: DMatrix::from_row_slice(4, 2, &[1.0, -2.0, 1.0, -1.0, 1.0, 1.0, 1.0, 2.0]),
        y: vec![0.0, 0.0, 1.0, 1.0],
        y_star: None,
        provenance: Provenance::External,
    };

    match fit_mle(&d, &LinkSpec::logit(), &SolverConfig::default()) {
        Err(FitError::SeparationSuspected { report }) => {
            println!("separation suspected, as expected:");
            println!("  max |eta|            = {:.2}", report.max_abs_eta);
            println!("  offending rows       = {:?}", report.offending_indices);
            println!(
                "  fitted prob extremes = ({:.3e}, {:.6})",
                report.fitted_prob_extremes.0, report.fitted_prob_extremes.1
            );
        }
        other => println!("unexpected result: {other:?}"),
    }

    // the diagnostic is also callable directly on any (eta, prob) profile
    let etas = [0.4, -31.0, 2.2];
    let probs = [0.6, 1e-14, 0.9];
    let report = diagnose_separation(&etas, &probs, 30.0).expect("nonempty input");
    println!(
        "\nstandalone diagnostic: separated = {}, offending = {:?}",
        report.separated, report.offending_indices
    );
}
