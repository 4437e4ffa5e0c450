//! Run configuration: a flat key-value text format with dotted section
//! keys, merged with command-line flag overrides (flags win). The fully
//! resolved configuration can be echoed and re-parsed losslessly, which is
//! what makes runs reproducible from their own output directory.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::dgp::{Dependence, DgpSpec, ErrorFamily, OutcomeKind};
use crate::estimators::{CutoffRule, EstimatorTag};
use crate::harness::{EquivFamily, ErrorNorm};
use crate::link::LinkFamily;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key:?}: {reason}")]
    BadValue { key: String, reason: String },
    #[error("missing required field {0:?}")]
    MissingField(String),
    #[error("malformed line {line}: expected 'key = value'")]
    MalformedLine { line: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Generate,
    Fit,
    Decompose,
    Study,
    Equivalence,
    Scaling,
}

impl Command {
    pub fn tag(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Fit => "fit",
            Command::Decompose => "decompose",
            Command::Study => "study",
            Command::Equivalence => "equivalence",
            Command::Scaling => "scaling",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "generate" => Ok(Command::Generate),
            "fit" => Ok(Command::Fit),
            "decompose" => Ok(Command::Decompose),
            "study" => Ok(Command::Study),
            "equivalence" => Ok(Command::Equivalence),
            "scaling" => Ok(Command::Scaling),
            other => Err(format!("unknown command {other:?}")),
        }
    }
}

/// Fully resolved run configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub out: PathBuf,
    pub estimator: EstimatorTag,
    pub link: LinkFamily,
    pub cutoff: CutoffRule,
    /// CSV dataset path for `fit`.
    pub data: Option<PathBuf>,
    /// Signed-measure file path for `decompose`.
    pub measure: Option<PathBuf>,
    /// True coefficients (intercept first) for generation and studies.
    pub beta: Vec<f64>,
    pub error_family: ErrorFamily,
    /// AR(1) coefficient; 0 means i.i.d. errors.
    pub rho: f64,
    /// Row count for `generate`.
    pub n: usize,
    pub sizes: Vec<usize>,
    pub reps: usize,
    /// Convergence-fraction threshold ε.
    pub eps: f64,
    pub norm: ErrorNorm,
    pub grad_tol: f64,
    pub calib_tol: f64,
    pub equiv_family: EquivFamily,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Fit,
            seed: 0,
            out: PathBuf::from("out"),
            estimator: EstimatorTag::Mle,
            link: LinkFamily::Logit,
            cutoff: CutoffRule::Zero,
            data: None,
            measure: None,
            beta: vec![0.0, 1.0],
            error_family: ErrorFamily::Logistic,
            rho: 0.0,
            n: 1000,
            sizes: vec![128, 256, 512, 1024],
            reps: 10,
            eps: 0.1,
            norm: ErrorNorm::LInf,
            grad_tol: 1e-8,
            calib_tol: 1e-10,
            equiv_family: EquivFamily::Normal,
        }
    }
}

fn bad(key: &str, reason: impl std::fmt::Display) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| bad(key, e))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| bad(key, e)))
        .collect()
}

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "run.command" => self.command = parse_num(key, v)?,
            "run.seed" => self.seed = parse_num(key, v)?,
            "run.out" => self.out = PathBuf::from(v),
            "fit.estimator" => self.estimator = parse_num(key, v)?,
            "fit.link" => self.link = parse_num(key, v)?,
            "fit.cutoff" => self.cutoff = parse_num(key, v)?,
            "fit.data" => self.data = Some(PathBuf::from(v)),
            "decompose.measure" => self.measure = Some(PathBuf::from(v)),
            "dgp.beta" => self.beta = parse_list(key, v)?,
            "dgp.error_family" => {
                self.error_family = match v {
                    "logistic" => ErrorFamily::Logistic,
                    "normal" => ErrorFamily::Normal,
                    "gumbel" => ErrorFamily::Gumbel,
                    other => return Err(bad(key, format!("unknown error family {other:?}"))),
                }
            }
            "dgp.rho" => self.rho = parse_num(key, v)?,
            "dgp.n" => self.n = parse_num(key, v)?,
            "study.sizes" => self.sizes = parse_list(key, v)?,
            "study.reps" => self.reps = parse_num(key, v)?,
            "study.eps" => self.eps = parse_num(key, v)?,
            "study.norm" => {
                self.norm = match v {
                    "linf" => ErrorNorm::LInf,
                    "l2" => ErrorNorm::L2,
                    other => return Err(bad(key, format!("unknown norm {other:?}"))),
                }
            }
            "tol.grad" => self.grad_tol = parse_num(key, v)?,
            "tol.calib" => self.calib_tol = parse_num(key, v)?,
            "equivalence.family" => self.equiv_family = parse_num(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parse the flat `key = value` text format. Blank lines and `#`
    /// comments are ignored; unknown keys are errors.
    pub fn parse_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::MalformedLine { line: i + 1 })?;
            cfg.set(key.trim(), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grad_tol <= 0.0 {
            return Err(bad("tol.grad", "tolerance must be positive"));
        }
        if self.calib_tol <= 0.0 {
            return Err(bad("tol.calib", "tolerance must be positive"));
        }
        if self.eps <= 0.0 {
            return Err(bad("study.eps", "tolerance must be positive"));
        }
        if self.reps == 0 {
            return Err(bad("study.reps", "need at least one replication"));
        }
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("study.sizes", "sizes must be strictly increasing"));
        }
        if self.beta.is_empty() {
            return Err(bad("dgp.beta", "need at least an intercept coefficient"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(bad("dgp.rho", "|rho| must be < 1"));
        }
        Ok(())
    }

    /// The DGP implied by the dgp.* keys.
    pub fn dgp(&self) -> DgpSpec {
        let mut spec = DgpSpec::iid_binary(self.beta.clone(), self.error_family);
        if self.rho != 0.0 {
            spec.dependence = Dependence::Ar1 { rho: self.rho };
        }
        spec.outcome = OutcomeKind::BinaryThreshold;
        spec
    }

    /// Serialize the fully resolved configuration; re-parsing the output
    /// reproduces `self` exactly.
    pub fn echo_effective(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("run.command", self.command.tag().to_string());
        map.insert("run.seed", self.seed.to_string());
        map.insert("run.out", self.out.display().to_string());
        map.insert("fit.estimator", self.estimator.tag().to_string());
        map.insert("fit.link", self.link.tag().to_string());
        map.insert(
            "fit.cutoff",
            match self.cutoff {
                CutoffRule::Zero => "zero".to_string(),
                CutoffRule::Median => "median".to_string(),
            },
        );
        if let Some(d) = &self.data {
            map.insert("fit.data", d.display().to_string());
        }
        if let Some(m) = &self.measure {
            map.insert("decompose.measure", m.display().to_string());
        }
        map.insert(
            "dgp.beta",
            self.beta
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert(
            "dgp.error_family",
            match self.error_family {
                ErrorFamily::Logistic => "logistic",
                ErrorFamily::Normal => "normal",
                ErrorFamily::Gumbel => "gumbel",
                ErrorFamily::NormalMixture { .. } => "normal_mixture",
            }
            .to_string(),
        );
        map.insert("dgp.rho", self.rho.to_string());
        map.insert("dgp.n", self.n.to_string());
        map.insert(
            "study.sizes",
            self.sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert("study.reps", self.reps.to_string());
        map.insert("study.eps", self.eps.to_string());
        map.insert(
            "study.norm",
            match self.norm {
                ErrorNorm::LInf => "linf",
                ErrorNorm::L2 => "l2",
            }
            .to_string(),
        );
        map.insert("tol.grad", self.grad_tol.to_string());
        map.insert("tol.calib", self.calib_tol.to_string());
        map.insert(
            "equivalence.family",
            match self.equiv_family {
                EquivFamily::Normal => "normal",
                EquivFamily::Gumbel => "gumbel",
            }
            .to_string(),
        );
        let mut out = String::new();
        for (k, v) in map {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
