//! Dual-measure GLM M-estimation.
//!
//! The crate splits the success/failure probability of a binary regression
//! into two separate measures obtained by Jordan decomposition of a finite
//! atomic signed measure, calibrates each side with its own exponent so the
//! link constraint holds per observation, and fits coefficients with a
//! deterministic fixed-point loop. Baseline maximum-likelihood and
//! latent-variable EM estimators are included for comparison, together with
//! a seeded data-generating-process simulator (i.i.d. and non-i.i.d.) and a
//! path-wise strong-convergence study harness.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod cli;
pub mod config;
pub mod dgp;
pub mod estimators;
pub mod harness;
pub mod link;
pub mod measure;
pub mod roots;
pub mod seed;

pub use dgp::{Dataset, DgpSpec};
pub use estimators::{
    calibrate_alpha, compare_equivalence, dual_loglik, fit_dual, fit_latent_em, fit_mle,
    CutoffRule, DualMeasureModel, EquivalenceReport, EstimatorTag, FitError, FitResult,
    SolverConfig,
};
pub use harness::{run_path, run_study, ConvergenceTrace, StudyResult};
pub use link::{diagnose_separation, LinkFamily, LinkSpec, SeparationReport};
pub use measure::{
    HahnDecomposition, JordanPair, ProbabilityMeasure, SignedMeasure, Weight,
};
