//! Seeded data generation for the latent-threshold regression model
//! `y* = x'β + ε`, `y = 1{y* > 0}`, with configurable i.i.d. and
//! non-i.i.d. error structures.
//!
//! All randomness flows from explicit seeds through a counter-based
//! stream; identical `(spec, sizes, seeds)` give bitwise-identical data.
//! Nested sample paths are produced by [`extend`], which appends a new
//! seeded segment while keeping every earlier row bit-identical
//! (AR(1) state is carried across the segment boundary).

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::seed::fnv1a;

#[derive(Debug, Error)]
pub enum DgpError {
    #[error("need n >= p, got n={n}, p={p}")]
    InsufficientData { n: usize, p: usize },
    #[error("invalid DGP spec: {0}")]
    InvalidSpec(String),
    #[error("cannot extend an externally loaded dataset")]
    CannotExtend,
    #[error("parse error at row {row}, column {column:?}: {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-column covariate distribution (intercept column excluded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateSpec {
    StdNormal,
    /// Uniform on (−1, 1).
    Uniform,
    /// Bernoulli(0.5) in {0, 1}.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorFamily {
    Logistic,
    Normal,
    Gumbel,
    /// Two-component normal mixture; `weight` is the probability of the
    /// first component.
    NormalMixture {
        weight: f64,
        mean1: f64,
        sd1: f64,
        mean2: f64,
        sd2: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    Iid,
    /// `e_i = ρ e_{i−1} + sqrt(1 − ρ²) z_i`; marginal variance preserved.
    Ar1 { rho: f64 },
    /// Error scale is `max(base + slope · x₁, 0.05)`, an affine function
    /// of the first (non-intercept) covariate.
    Heteroskedastic { base: f64, slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    BinaryThreshold,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    /// Includes the intercept coefficient at index 0.
    pub beta_true: Vec<f64>,
    /// One entry per non-intercept column; length = beta_true.len() − 1.
    pub covariates: Vec<CovariateSpec>,
    pub error_family: ErrorFamily,
    pub dependence: Dependence,
    pub outcome: OutcomeKind,
}

impl DgpSpec {
    /// Shorthand for an i.i.d. binary DGP with standard-normal covariates.
    pub fn iid_binary(beta_true: Vec<f64>, error_family: ErrorFamily) -> Self {
        let covariates = vec![CovariateSpec::StdNormal; beta_true.len().saturating_sub(1)];
        Self {
            beta_true,
            covariates,
            error_family,
            dependence: Dependence::Iid,
            outcome: OutcomeKind::BinaryThreshold,
        }
    }

    pub fn validate(&self) -> Result<(), DgpError> {
        if self.beta_true.is_empty() {
            return Err(DgpError::InvalidSpec("beta_true is empty".to_string()));
        }
        if self.beta_true.iter().any(|b| !b.is_finite()) {
            return Err(DgpError::InvalidSpec("beta_true must be finite".to_string()));
        }
        if self.covariates.len() + 1 != self.beta_true.len() {
            return Err(DgpError::InvalidSpec(format!(
                "covariates ({}) must match beta_true minus intercept ({})",
                self.covariates.len(),
                self.beta_true.len() - 1
            )));
        }
        if let Dependence::Ar1 { rho } = self.dependence {
            if !(rho.abs() < 1.0) {
                return Err(DgpError::InvalidSpec(format!("|rho| must be < 1, got {rho}")));
            }
        }
        if let ErrorFamily::NormalMixture { weight, sd1, sd2, .. } = self.error_family {
            if !(0.0 < weight && weight < 1.0) {
                return Err(DgpError::InvalidSpec(format!(
                    "mixture weight must lie in (0,1), got {weight}"
                )));
            }
            if sd1 <= 0.0 || sd2 <= 0.0 {
                return Err(DgpError::InvalidSpec("mixture sds must be positive".to_string()));
            }
        }
        Ok(())
    }

    /// Stable content hash, independent of grid position.
    pub fn fingerprint(&self) -> u64 {
        fnv1a(serde_json::to_string(self).expect("spec serializes").as_bytes())
    }
}

/// One seeded generation segment; a dataset is the concatenation of its
/// segments' rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Generated { dgp: DgpSpec, segments: Vec<Segment> },
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// n×p design matrix; first column is all ones.
    pub x: DMatrix<f64>,
    /// Outcomes: exact 0.0/1.0 for binary, reals for continuous.
    pub y: Vec<f64>,
    pub y_star: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Content hash of (X, y); used to validate cross-fit comparisons.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::with_capacity(8 * (self.x.len() + self.y.len()) + 16);
        bytes.extend_from_slice(&(self.n() as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.p() as u64).to_le_bytes());
        for v in self.x.iter() {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        for v in &self.y {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        fnv1a(&bytes)
    }
}

/// Uniform in the open interval (0, 1).
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

fn std_normal_quantile(u: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(u)
}

/// Standardized innovation draw for the configured family.
fn draw_innovation(family: ErrorFamily, rng: &mut ChaCha8Rng) -> f64 {
    match family {
        ErrorFamily::Logistic => {
            let u = open_uniform(rng);
            (u / (1.0 - u)).ln()
        }
        ErrorFamily::Normal => std_normal_quantile(open_uniform(rng)),
        ErrorFamily::Gumbel => {
            let u = open_uniform(rng);
            -(-u.ln()).ln()
        }
        ErrorFamily::NormalMixture {
            weight,
            mean1,
            sd1,
            mean2,
            sd2,
        } => {
            let pick = open_uniform(rng);
            let z = std_normal_quantile(open_uniform(rng));
            if pick < weight {
                mean1 + sd1 * z
            } else {
                mean2 + sd2 * z
            }
        }
    }
}

fn draw_covariate(spec: CovariateSpec, rng: &mut ChaCha8Rng) -> f64 {
    match spec {
        CovariateSpec::StdNormal => std_normal_quantile(open_uniform(rng)),
        CovariateSpec::Uniform => 2.0 * open_uniform(rng) - 1.0,
        CovariateSpec::Binary => {
            if open_uniform(rng) < 0.5 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Generate a dataset from a list of `(n, seed)` segments. Each segment
/// restarts the RNG stream from its own seed; AR(1) error state carries
/// across segment boundaries so the concatenation is one dependent path.
pub fn generate_chained(dgp: &DgpSpec, segments: &[Segment]) -> Result<Dataset, DgpError> {
    dgp.validate()?;
    let p = dgp.beta_true.len();
    let total_n: usize = segments.iter().map(|s| s.n).sum();
    if total_n < p {
        return Err(DgpError::InsufficientData { n: total_n, p });
    }
    let mut rows = Vec::with_capacity(total_n * p);
    let mut y = Vec::with_capacity(total_n);
    let mut y_star = Vec::with_capacity(total_n);
    let mut ar_state: Option<f64> = None;
    for seg in segments {
        let mut rng = ChaCha8Rng::seed_from_u64(seg.seed);
        for _ in 0..seg.n {
            let mut xi = Vec::with_capacity(p);
            xi.push(1.0);
            for c in &dgp.covariates {
                xi.push(draw_covariate(*c, &mut rng));
            }
            let z = draw_innovation(dgp.error_family, &mut rng);
            let e = match dgp.dependence {
                Dependence::Iid => z,
                Dependence::Ar1 { rho } => {
                    let e = match ar_state {
                        Some(prev) => rho * prev + (1.0 - rho * rho).sqrt() * z,
                        None => z,
                    };
                    ar_state = Some(e);
                    e
                }
                Dependence::Heteroskedastic { base, slope } => {
                    let x1 = xi.get(1).copied().unwrap_or(0.0);
                    (base + slope * x1).max(0.05) * z
                }
            };
            let eta: f64 = xi
                .iter()
                .zip(&dgp.beta_true)
                .map(|(x, b)| x * b)
                .sum();
            let ys = eta + e;
            y_star.push(ys);
            y.push(match dgp.outcome {
                OutcomeKind::BinaryThreshold => {
                    if ys > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                OutcomeKind::Continuous => ys,
            });
            rows.extend_from_slice(&xi);
        }
    }
    Ok(Dataset {
        x: DMatrix::from_row_slice(total_n, p, &rows),
        y,
        y_star: Some(y_star),
        provenance: Provenance::Generated {
            dgp: dgp.clone(),
            segments: segments.to_vec(),
        },
    })
}

/// Deterministic generation of `n` rows from a single seed.
pub fn generate(dgp: &DgpSpec, n: usize, seed: u64) -> Result<Dataset, DgpError> {
    generate_chained(dgp, &[Segment { n, seed }])
}

/// Append `m` rows drawn from a fresh seed; the first rows stay
/// bit-identical and AR(1) dependence continues across the boundary.
pub fn extend(d: &Dataset, m: usize, seed: u64) -> Result<Dataset, DgpError> {
    let (dgp, segments) = match &d.provenance {
        Provenance::Generated { dgp, segments } => (dgp, segments),
        Provenance::External => return Err(DgpError::CannotExtend),
    };
    let mut segs = segments.clone();
    segs.push(Segment { n: m, seed });
    generate_chained(dgp, &segs)
}

/// Write a dataset as CSV: non-intercept covariate columns `x1..`, the
/// outcome column `y`, and `y_star` when present. The intercept column is
/// implicit and re-prepended on load.
pub fn save_csv(d: &Dataset, path: &Path) -> Result<(), DgpError> {
    let mut w = csv::Writer::from_path(path)?;
    let p = d.p();
    let mut header: Vec<String> = (1..p).map(|j| format!("x{j}")).collect();
    header.push("y".to_string());
    if d.y_star.is_some() {
        header.push("y_star".to_string());
    }
    w.write_record(&header)?;
    for i in 0..d.n() {
        let mut rec: Vec<String> = (1..p).map(|j| format!("{}", d.x[(i, j)])).collect();
        rec.push(format!("{}", d.y[i]));
        if let Some(ys) = &d.y_star {
            rec.push(format!("{}", ys[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Load an external dataset from CSV. Columns other than `y`/`y_star` are
/// covariates in file order; an intercept column is prepended unless one
/// named `intercept` already exists. When `binary` is set, outcome values
/// must be exactly 0 or 1.
pub fn load_csv(path: &Path, binary: bool) -> Result<Dataset, DgpError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(|h| h.to_string()).collect();
    let y_col = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| DgpError::Parse {
            row: 0,
            column: "y".to_string(),
            reason: "outcome column 'y' missing from header".to_string(),
        })?;
    let ystar_col = headers.iter().position(|h| h == "y_star");
    let has_intercept = headers.iter().any(|h| h == "intercept");
    let cov_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != y_col && Some(j) != ystar_col)
        .collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    let mut y_star = Vec::new();
    let mut n = 0usize;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize| -> Result<f64, DgpError> {
            rec.get(j)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| DgpError::Parse {
                    row: i + 1,
                    column: headers[j].clone(),
                    reason: format!("non-numeric cell {:?}", rec.get(j).unwrap_or("")),
                })
        };
        if !has_intercept {
            rows.push(1.0);
        }
        for &j in &cov_cols {
            rows.push(parse(j)?);
        }
        let yv = parse(y_col)?;
        if binary && yv != 0.0 && yv != 1.0 {
            return Err(DgpError::Parse {
                row: i + 1,
                column: "y".to_string(),
                reason: format!("binary outcome must be 0 or 1, got {yv}"),
            });
        }
        y.push(yv);
        if let Some(j) = ystar_col {
            y_star.push(parse(j)?);
        }
        n += 1;
    }
    let p = cov_cols.len() + usize::from(!has_intercept);
    if n < p {
        return Err(DgpError::InsufficientData { n, p });
    }
    Ok(Dataset {
        x: DMatrix::from_row_slice(n, p, &rows),
        y,
        y_star: if ystar_col.is_some() { Some(y_star) } else { None },
        provenance: Provenance::External,
    })
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorr(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let cov: f64 = (1..n).map(|i| (xs[i] - mean) * (xs[i - 1] - mean)).sum();
    cov / var
}
