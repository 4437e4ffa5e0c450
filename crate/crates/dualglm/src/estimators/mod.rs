//! Estimators: baseline maximum likelihood, latent-variable EM, and the
//! dual-measure calibrated estimator with per-observation link constraints.

mod dual;
mod latent_em;
mod mle;

pub use dual::{calibrate_alpha, dual_loglik, fit_dual, DualMeasureModel};
pub use latent_em::fit_latent_em;
pub use mle::{binomial_loglik, fit_mle, standard_errors};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgp::Dataset;
use crate::link::{LinkFamily, LinkSpec, SeparationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    Mle,
    LatentEm,
    DualMeasure,
}

impl EstimatorTag {
    pub fn tag(self) -> &'static str {
        match self {
            EstimatorTag::Mle => "mle",
            EstimatorTag::LatentEm => "latent_em",
            EstimatorTag::DualMeasure => "dual_measure",
        }
    }
}

impl std::str::FromStr for EstimatorTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mle" => Ok(EstimatorTag::Mle),
            "latent_em" => Ok(EstimatorTag::LatentEm),
            "dual_measure" | "dual" => Ok(EstimatorTag::DualMeasure),
            other => Err(format!("unknown estimator {other:?}")),
        }
    }
}

/// Rule splitting observations into the ν⁺ and ν⁻ sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutoffRule {
    /// ν⁺ side = observations with y = 1 (latent threshold at zero).
    #[default]
    Zero,
    /// ν⁺ side = observations with fitted probability above the sample median.
    Median,
}

impl std::str::FromStr for CutoffRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => Ok(CutoffRule::Zero),
            "median" => Ok(CutoffRule::Median),
            other => Err(format!("unknown cutoff rule {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// ℓ∞ gradient tolerance for Newton/Fisher scoring.
    pub grad_tol: f64,
    /// ℓ∞ parameter-change tolerance for EM and the dual fixed point.
    pub param_tol: f64,
    /// Iteration cap for the baseline Newton solver.
    pub max_iter: usize,
    /// Iteration cap for the dual fixed-point loop.
    pub dual_max_iter: usize,
    /// Iteration cap for EM.
    pub em_max_iter: usize,
    /// |η| threshold for the separation diagnostic.
    pub separation_threshold: f64,
    /// Bracket for the calibration exponent root solve.
    pub alpha_bracket: (f64, f64),
    /// Residual tolerance for the moment-matching root.
    pub calib_tol: f64,
    /// Step-halving budget before declaring Newton divergence.
    pub max_halvings: usize,
    pub cutoff: CutoffRule,
    /// When set, the dual fit holds (α₁, α₂) fixed at these values.
    pub pinned_alpha: Option<(f64, f64)>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            param_tol: 1e-8,
            max_iter: 100,
            dual_max_iter: 500,
            em_max_iter: 5000,
            separation_threshold: crate::link::SEPARATION_THRESHOLD,
            alpha_bracket: (1e-3, 1e3),
            calib_tol: 1e-10,
            max_halvings: 50,
            cutoff: CutoffRule::Zero,
            pinned_alpha: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("separation suspected: max |eta| = {}", report.max_abs_eta)]
    SeparationSuspected { report: SeparationReport },
    #[error("estimator requires binary outcomes in {{0,1}}")]
    NonBinaryOutcome,
    #[error("need n >= p, got n={n}, p={p}")]
    InsufficientData { n: usize, p: usize },
    #[error("unsupported link for this estimator: {0}")]
    UnsupportedLink(String),
    #[error("calibration infeasible on the {side} side: {detail}")]
    CalibrationInfeasible { side: &'static str, detail: String },
    #[error("Newton step diverged after step-halving budget exhausted")]
    NewtonDivergence,
    #[error("calibration precondition violated: {0}")]
    CalibrationPrecondition(String),
    #[error("comparison invalid: {0}")]
    ComparisonInvalid(String),
    #[error("domain error: {0}")]
    Domain(String),
}

fn default_link_family() -> LinkFamily {
    LinkFamily::Logit
}

/// Point-estimation result; serializes with the fixed field set consumed
/// by the study harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimator: EstimatorTag,
    pub beta: Vec<f64>,
    pub alpha: Option<(f64, f64)>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub separation: SeparationReport,
    #[serde(skip)]
    pub dataset_fingerprint: u64,
    #[serde(skip, default = "default_link_family")]
    pub link_family: LinkFamily,
    /// Post-fit max of |ν_i^α − λ̃_i| over observations (dual fit only).
    #[serde(skip)]
    pub max_calibration_residual: Option<f64>,
}

/// Discrepancy report between a binary-likelihood fit and a latent fit on
/// the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub beta_binary: Vec<f64>,
    pub beta_latent: Vec<f64>,
    pub max_abs_diff: f64,
    /// Sup over observations of |F̂_binary − F̂_latent|.
    pub prob_path_sup_diff: f64,
    pub equivalent_at_tol: bool,
}

/// Compare two fits of the same dataset under the same link family.
pub fn compare_equivalence(
    fb: &FitResult,
    fl: &FitResult,
    d: &Dataset,
    tol: f64,
) -> Result<EquivalenceReport, FitError> {
    let fp = d.fingerprint();
    if fb.dataset_fingerprint != fp || fl.dataset_fingerprint != fp {
        return Err(FitError::ComparisonInvalid(
            "dataset fingerprints do not match".to_string(),
        ));
    }
    if fb.link_family != fl.link_family {
        return Err(FitError::ComparisonInvalid(format!(
            "link families differ: {} vs {}",
            fb.link_family.tag(),
            fl.link_family.tag()
        )));
    }
    if fb.beta.len() != fl.beta.len() {
        return Err(FitError::ComparisonInvalid(
            "coefficient dimensions differ".to_string(),
        ));
    }
    let max_abs_diff = fb
        .beta
        .iter()
        .zip(&fl.beta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let link = LinkSpec::new(fb.link_family);
    let mut sup = 0.0f64;
    for i in 0..d.n() {
        let eta_b: f64 = (0..d.p()).map(|j| d.x[(i, j)] * fb.beta[j]).sum();
        let eta_l: f64 = (0..d.p()).map(|j| d.x[(i, j)] * fl.beta[j]).sum();
        sup = sup.max((link.squash(eta_b) - link.squash(eta_l)).abs());
    }
    Ok(EquivalenceReport {
        beta_binary: fb.beta.clone(),
        beta_latent: fl.beta.clone(),
        max_abs_diff,
        prob_path_sup_diff: sup,
        equivalent_at_tol: max_abs_diff <= tol,
    })
}
