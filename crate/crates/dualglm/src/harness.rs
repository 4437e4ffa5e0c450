//! Path-wise convergence experiments over nested samples, grid studies,
//! and the equivalence / scaling experiments.
//!
//! Almost-sure convergence is not finitely checkable; the proxy tracked
//! here is the sup-tail coefficient error along one nested sample path,
//! aggregated into a convergence fraction across independently seeded
//! paths. Per-path seeds are derived from content (DGP fingerprint,
//! estimator, replication index), never from grid position, so results are
//! invariant under grid permutation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgp::{extend, generate, DgpError, DgpSpec, ErrorFamily};
use crate::estimators::{
    compare_equivalence, fit_dual, fit_latent_em, fit_mle, EquivalenceReport, EstimatorTag,
    FitResult, SolverConfig,
};
use crate::link::LinkSpec;
use crate::seed::{fnv1a, mix};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Dgp(#[from] DgpError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Norm applied to the coefficient error vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNorm {
    #[default]
    LInf,
    L2,
}

impl ErrorNorm {
    pub fn apply(self, diff: impl Iterator<Item = f64>) -> f64 {
        match self {
            ErrorNorm::LInf => diff.map(f64::abs).fold(0.0, f64::max),
            ErrorNorm::L2 => diff.map(|d| d * d).sum::<f64>().sqrt(),
        }
    }
}

/// One nested sample path: per-size coefficient errors and their backward
/// running supremum. A failed fit leaves a hole with its reason recorded;
/// the path is still usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub sample_sizes: Vec<usize>,
    /// ‖β̂_n − β_true‖ per size; `None` where the fit failed.
    pub errors: Vec<Option<f64>>,
    /// sup over m ≥ n of errors[m] (available points only); nonincreasing.
    pub sup_tail: Vec<Option<f64>>,
    pub converged: Vec<bool>,
    pub failure_reasons: Vec<Option<String>>,
    pub estimator: EstimatorTag,
    pub dgp_fingerprint: u64,
    pub seed: u64,
}

impl ConvergenceTrace {
    /// Structural invariants: equal lengths, nonincreasing sup-tail,
    /// sup_tail[i] ≥ errors[i].
    pub fn check_invariants(&self) -> bool {
        let k = self.sample_sizes.len();
        if self.errors.len() != k
            || self.sup_tail.len() != k
            || self.converged.len() != k
            || self.failure_reasons.len() != k
        {
            return false;
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        let mut prev: Option<f64> = None;
        for i in 0..k {
            if let (Some(e), Some(s)) = (self.errors[i], self.sup_tail[i]) {
                if s < e {
                    return false;
                }
            }
            if self.errors[i].is_some() && self.sup_tail[i].is_none() {
                return false;
            }
            if let Some(s) = self.sup_tail[i] {
                if let Some(p) = prev {
                    if s > p {
                        return false;
                    }
                }
                prev = Some(s);
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub grid_points: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub norm: ErrorNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub traces: Vec<ConvergenceTrace>,
    pub metadata: StudyMetadata,
}

impl StudyResult {
    /// Fraction of paths whose sup-tail error from sample size `n` onward
    /// is at most `eps`. Nondecreasing in `n` because sup-tails are
    /// nonincreasing along each path.
    pub fn convergence_fraction(&self, n: usize, eps: f64) -> f64 {
        if self.traces.is_empty() {
            return 0.0;
        }
        let hits = self
            .traces
            .iter()
            .filter(|t| {
                t.sample_sizes
                    .iter()
                    .position(|&s| s >= n)
                    .and_then(|i| t.sup_tail[i])
                    .is_some_and(|s| s <= eps)
            })
            .count();
        hits as f64 / self.traces.len() as f64
    }
}

/// Working link implied by the latent error family: the link whose base
/// CDF matches the error law (mixtures fall back to logit, a deliberately
/// misspecified working model).
pub fn working_link(family: ErrorFamily) -> LinkSpec {
    match family {
        ErrorFamily::Logistic => LinkSpec::logit(),
        ErrorFamily::Normal => LinkSpec::probit(),
        // latent gumbel threshold at zero ⇒ P(y=1) = 1 − exp(−e^η)
        ErrorFamily::Gumbel => LinkSpec::cloglog(),
        ErrorFamily::NormalMixture { .. } => LinkSpec::logit(),
    }
}

fn fit_by_tag(
    tag: EstimatorTag,
    d: &crate::dgp::Dataset,
    link: &LinkSpec,
    cfg: &SolverConfig,
) -> Result<FitResult, crate::estimators::FitError> {
    match tag {
        EstimatorTag::Mle => fit_mle(d, link, cfg),
        EstimatorTag::LatentEm => fit_latent_em(d, link, cfg),
        EstimatorTag::DualMeasure => fit_dual(d, link, cfg),
    }
}

/// One nested path: the dataset grows by seeded extension between sizes,
/// so earlier rows are bit-identical across fits.
pub fn run_path(
    dgp: &DgpSpec,
    estimator: EstimatorTag,
    sizes: &[usize],
    seed: u64,
    norm: ErrorNorm,
    cfg: &SolverConfig,
) -> Result<ConvergenceTrace, HarnessError> {
    if sizes.is_empty() {
        return Err(HarnessError::Precondition("sizes is empty".to_string()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Precondition(
            "sizes must be strictly increasing".to_string(),
        ));
    }
    let link = working_link(dgp.error_family);
    let mut errors = Vec::with_capacity(sizes.len());
    let mut converged = Vec::with_capacity(sizes.len());
    let mut reasons = Vec::with_capacity(sizes.len());
    let mut data = generate(dgp, sizes[0], mix(seed, 0))?;
    for (k, &n) in sizes.iter().enumerate() {
        if k > 0 {
            data = extend(&data, n - sizes[k - 1], mix(seed, k as u64))?;
        }
        match fit_by_tag(estimator, &data, &link, cfg) {
            Ok(f) => {
                let err = norm.apply(
                    f.beta
                        .iter()
                        .zip(&dgp.beta_true)
                        .map(|(b, t)| b - t),
                );
                errors.push(Some(err));
                converged.push(f.converged);
                reasons.push(None);
            }
            Err(e) => {
                errors.push(None);
                converged.push(false);
                reasons.push(Some(e.to_string()));
            }
        }
    }
    // backward running maximum over the available points
    let mut sup_tail = vec![None; sizes.len()];
    let mut running: Option<f64> = None;
    for i in (0..sizes.len()).rev() {
        if let Some(e) = errors[i] {
            running = Some(running.map_or(e, |r: f64| r.max(e)));
        }
        sup_tail[i] = running;
    }
    Ok(ConvergenceTrace {
        sample_sizes: sizes.to_vec(),
        errors,
        sup_tail,
        converged,
        failure_reasons: reasons,
        estimator,
        dgp_fingerprint: dgp.fingerprint(),
        seed,
    })
}

/// Content-derived per-path seed: a pure function of (base seed, DGP
/// content, estimator, replication index). Grid position never enters.
fn path_seed(base_seed: u64, dgp: &DgpSpec, estimator: EstimatorTag, rep: usize) -> u64 {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&dgp.fingerprint().to_le_bytes());
    bytes.extend_from_slice(estimator.tag().as_bytes());
    bytes.extend_from_slice(&(rep as u64).to_le_bytes());
    mix(base_seed, fnv1a(&bytes))
}

/// Grid study: `replications` independent paths per (DGP, estimator)
/// point. Per-path fit failures are recorded in the traces, never fatal.
pub fn run_study(
    grid: &[(DgpSpec, EstimatorTag)],
    sizes: &[usize],
    replications: usize,
    base_seed: u64,
    norm: ErrorNorm,
    cfg: &SolverConfig,
) -> Result<StudyResult, HarnessError> {
    if replications == 0 {
        return Err(HarnessError::Precondition(
            "replications must be at least 1".to_string(),
        ));
    }
    let mut traces = Vec::with_capacity(grid.len() * replications);
    for (dgp, estimator) in grid {
        for rep in 0..replications {
            let seed = path_seed(base_seed, dgp, *estimator, rep);
            traces.push(run_path(dgp, *estimator, sizes, seed, norm, cfg)?);
        }
    }
    // canonical order, independent of grid order
    traces.sort_by(|a, b| {
        (a.dgp_fingerprint, a.estimator.tag(), a.seed)
            .cmp(&(b.dgp_fingerprint, b.estimator.tag(), b.seed))
    });
    Ok(StudyResult {
        traces,
        metadata: StudyMetadata {
            grid_points: grid.len(),
            replications,
            base_seed,
            norm,
        },
    })
}

/// Persist a study: one JSON file per trace plus `study.csv` with columns
/// dgp_id, estimator, n, error, sup_tail, seed, converged. Output bytes
/// are a pure function of the study content.
pub fn save_study(study: &StudyResult, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("study.csv"))?;
    w.write_record(["dgp_id", "estimator", "n", "error", "sup_tail", "seed", "converged"])?;
    for t in &study.traces {
        let dgp_id = format!("{:016x}", t.dgp_fingerprint);
        for i in 0..t.sample_sizes.len() {
            w.write_record([
                dgp_id.clone(),
                t.estimator.tag().to_string(),
                t.sample_sizes[i].to_string(),
                t.errors[i].map_or(String::new(), |e| format!("{e}")),
                t.sup_tail[i].map_or(String::new(), |s| format!("{s}")),
                t.seed.to_string(),
                t.converged[i].to_string(),
            ])?;
        }
        let name = format!("trace_{dgp_id}_{}_{:016x}.json", t.estimator.tag(), t.seed);
        std::fs::write(dir.join(name), serde_json::to_string_pretty(t)?)?;
    }
    w.flush()?;
    Ok(())
}

/// Error families admitted by the equivalence experiment: one where the
/// probit working model matches the latent law, one where it cannot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivFamily {
    Normal,
    Gumbel,
}

impl std::str::FromStr for EquivFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "normal" => Ok(EquivFamily::Normal),
            "gumbel" => Ok(EquivFamily::Gumbel),
            other => Err(format!("unknown error family {other:?}")),
        }
    }
}

/// Per replication, fit the binary likelihood route and the latent-EM
/// route under a probit working model and report their discrepancy.
/// Failed replications are skipped; the experiment continues.
pub fn equivalence_experiment(
    family: EquivFamily,
    n: usize,
    replications: usize,
    base_seed: u64,
) -> Result<Vec<EquivalenceReport>, HarnessError> {
    if n < 100 {
        return Err(HarnessError::Precondition(format!(
            "equivalence experiment needs n >= 100, got {n}"
        )));
    }
    let err_family = match family {
        EquivFamily::Normal => ErrorFamily::Normal,
        EquivFamily::Gumbel => ErrorFamily::Gumbel,
    };
    let dgp = DgpSpec::iid_binary(vec![0.3, 0.8], err_family);
    let link = LinkSpec::probit();
    let cfg = SolverConfig::default();
    let mut reports = Vec::with_capacity(replications);
    for rep in 0..replications {
        let seed = path_seed(base_seed, &dgp, EstimatorTag::LatentEm, rep);
        let d = generate(&dgp, n, seed)?;
        let pair = fit_mle(&d, &link, &cfg)
            .and_then(|fb| fit_latent_em(&d, &link, &cfg).map(|fl| (fb, fl)));
        if let Ok((fb, fl)) = pair {
            if let Ok(r) = compare_equivalence(&fb, &fl, &d, 0.05) {
                reports.push(r);
            }
        }
    }
    Ok(reports)
}

/// Slope-ratio summary from refitting probit data with both logit and
/// probit maximum likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub ratios: Vec<f64>,
    pub mean_ratio: f64,
    /// Central 90% interval (5th and 95th percentiles) of the ratios.
    pub interval_90: (f64, f64),
    pub failed_replications: usize,
}

/// Probit DGP; per replication, fit logit and probit MLE and record the
/// slope ratio β̂_logit / β̂_probit.
pub fn scaling_experiment(
    n: usize,
    replications: usize,
    base_seed: u64,
) -> Result<ScalingSummary, HarnessError> {
    if n < 1000 {
        return Err(HarnessError::Precondition(format!(
            "scaling experiment needs n >= 1000, got {n}"
        )));
    }
    let dgp = DgpSpec::iid_binary(vec![0.0, 1.0], ErrorFamily::Normal);
    let cfg = SolverConfig::default();
    let mut ratios = Vec::with_capacity(replications);
    let mut failed = 0usize;
    for rep in 0..replications {
        let seed = path_seed(base_seed, &dgp, EstimatorTag::Mle, rep);
        let d = generate(&dgp, n, seed)?;
        let pair = fit_mle(&d, &LinkSpec::logit(), &cfg)
            .and_then(|fl| fit_mle(&d, &LinkSpec::probit(), &cfg).map(|fp| (fl, fp)));
        match pair {
            Ok((fl, fp)) => ratios.push(fl.beta[1] / fp.beta[1]),
            Err(_) => failed += 1,
        }
    }
    let mean = if ratios.is_empty() {
        f64::NAN
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pct = |q: f64| {
        if sorted.is_empty() {
            f64::NAN
        } else {
            let idx = (q * (sorted.len() - 1) as f64).round() as usize;
            sorted[idx]
        }
    };
    Ok(ScalingSummary {
        ratios,
        mean_ratio: mean,
        interval_90: (pct(0.05), pct(0.95)),
        failed_replications: failed,
    })
}
