//! Command dispatch for the thin binary entry point.
//!
//! Every run writes its fully resolved configuration next to its outputs;
//! timestamps live only in `metadata.json` so the scientific artifacts are
//! reproducible byte-for-byte. Failure categories map to distinct exit
//! codes: parse/contract errors = 2, numeric failures = 3, I/O = 4.

use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::config::{Command, ConfigError, RunConfig};
use crate::dgp::{generate, load_csv, save_csv, DgpError};
use crate::estimators::{
    fit_dual, fit_latent_em, fit_mle, EstimatorTag, FitError, SolverConfig,
};
use crate::harness::{
    equivalence_experiment, run_study, save_study, scaling_experiment, HarnessError,
};
use crate::link::LinkSpec;
use crate::measure::{
    hahn_decompose, jordan_decompose, normalize, total_variation, MeasureError, SignedMeasure,
};

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dgp(#[from] DgpError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

fn dgp_exit_code(e: &DgpError) -> i32 {
    match e {
        DgpError::Parse { .. } | DgpError::InvalidSpec(_) => EXIT_PARSE,
        DgpError::Csv(_) | DgpError::Io(_) => EXIT_IO,
        DgpError::InsufficientData { .. } | DgpError::CannotExtend => EXIT_NUMERIC,
    }
}

impl CliError {
    /// Map every failure into one of the three exit-code categories.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io(_)) => EXIT_IO,
            CliError::Config(_) => EXIT_PARSE,
            CliError::Dgp(e) => dgp_exit_code(e),
            CliError::Fit(_) => EXIT_NUMERIC,
            CliError::Measure(e) => match e {
                MeasureError::Io(_) => EXIT_IO,
                MeasureError::NormalizationUndefined(_) => EXIT_NUMERIC,
                _ => EXIT_PARSE,
            },
            CliError::Harness(e) => match e {
                HarnessError::Precondition(_) => EXIT_PARSE,
                HarnessError::Dgp(d) => dgp_exit_code(d),
                _ => EXIT_IO,
            },
            CliError::Io(_) | CliError::Json(_) => EXIT_IO,
        }
    }
}

/// Flag-level overrides collected by the argument parser; every set field
/// wins over the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub estimator: Option<String>,
    pub link: Option<String>,
    pub cutoff: Option<String>,
    pub sizes: Option<String>,
    pub reps: Option<usize>,
    pub data: Option<PathBuf>,
    pub measure: Option<PathBuf>,
    pub n: Option<usize>,
    pub beta: Option<String>,
    pub error_family: Option<String>,
    pub family: Option<String>,
}

/// Resolve the effective configuration: file first (when given), then
/// flags on top, then the subcommand itself.
pub fn resolve_config(command: Command, ov: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &ov.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.command = command;
    if let Some(s) = ov.seed {
        cfg.set("run.seed", &s.to_string())?;
    }
    if let Some(o) = &ov.out {
        cfg.out = o.clone();
    }
    if let Some(e) = &ov.estimator {
        cfg.set("fit.estimator", e)?;
    }
    if let Some(l) = &ov.link {
        cfg.set("fit.link", l)?;
    }
    if let Some(c) = &ov.cutoff {
        cfg.set("fit.cutoff", c)?;
    }
    if let Some(s) = &ov.sizes {
        cfg.set("study.sizes", s)?;
    }
    if let Some(r) = ov.reps {
        cfg.set("study.reps", &r.to_string())?;
    }
    if let Some(d) = &ov.data {
        cfg.data = Some(d.clone());
    }
    if let Some(m) = &ov.measure {
        cfg.measure = Some(m.clone());
    }
    if let Some(n) = ov.n {
        cfg.set("dgp.n", &n.to_string())?;
    }
    if let Some(b) = &ov.beta {
        cfg.set("dgp.beta", b)?;
    }
    if let Some(f) = &ov.error_family {
        cfg.set("dgp.error_family", f)?;
    }
    if let Some(f) = &ov.family {
        cfg.set("equivalence.family", f)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        grad_tol: cfg.grad_tol,
        calib_tol: cfg.calib_tol,
        cutoff: cfg.cutoff,
        ..SolverConfig::default()
    }
}

fn write_run_preamble(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("effective_config.txt"), cfg.echo_effective())?;
    // the only artifact carrying wall-clock state
    let ts = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let meta = json!({
        "command": cfg.command.tag(),
        "timestamp_unix": ts,
        "version": env!("CARGO_PKG_VERSION"),
    });
    std::fs::write(
        cfg.out.join("metadata.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(())
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Execute a resolved configuration; returns lines already printed.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    write_run_preamble(cfg)?;
    match cfg.command {
        Command::Generate => {
            let d = generate(&cfg.dgp(), cfg.n, cfg.seed)?;
            save_csv(&d, &cfg.out.join("data.csv"))?;
            println!("generate: wrote {} rows to data.csv", d.n());
        }
        Command::Fit => {
            let data = cfg
                .data
                .as_ref()
                .ok_or(ConfigError::MissingField("fit.data".to_string()))?;
            let d = load_csv(data, true)?;
            let link = LinkSpec::new(cfg.link);
            let solver = solver_config(cfg);
            let fit = match cfg.estimator {
                EstimatorTag::Mle => fit_mle(&d, &link, &solver),
                EstimatorTag::LatentEm => fit_latent_em(&d, &link, &solver),
                EstimatorTag::DualMeasure => fit_dual(&d, &link, &solver),
            };
            match fit {
                Ok(f) => {
                    write_json(&cfg.out, "fit.json", &f)?;
                    println!(
                        "fit: {} converged={} loglik={:.6}",
                        f.estimator.tag(),
                        f.converged,
                        f.loglik
                    );
                }
                Err(FitError::SeparationSuspected { report }) => {
                    // surface the pathology end-to-end: diagnostic JSON
                    // beside the config, numeric-failure exit code
                    let payload = json!({
                        "error": "separation_suspected",
                        "separation": report,
                    });
                    write_json(&cfg.out, "separation.json", &payload)?;
                    println!("fit: separation suspected, wrote separation.json");
                    return Err(FitError::SeparationSuspected { report }.into());
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Decompose => {
            let path = cfg
                .measure
                .as_ref()
                .ok_or(ConfigError::MissingField("decompose.measure".to_string()))?;
            let m = SignedMeasure::from_file(path)?;
            let hahn = hahn_decompose(&m);
            let jordan = jordan_decompose(&m);
            let tv = total_variation(&m);
            let normalized = normalize(&m).ok();
            let payload = json!({
                "hahn": hahn,
                "jordan": jordan,
                "total_variation": tv,
                "normalized": normalized,
            });
            write_json(&cfg.out, "decomposition.json", &payload)?;
            println!("decompose: {} atoms, wrote decomposition.json", m.len());
        }
        Command::Study => {
            let grid = vec![(cfg.dgp(), cfg.estimator)];
            let study = run_study(
                &grid,
                &cfg.sizes,
                cfg.reps,
                cfg.seed,
                cfg.norm,
                &solver_config(cfg),
            )?;
            save_study(&study, &cfg.out)?;
            let n_max = *cfg.sizes.last().expect("validated nonempty");
            println!(
                "study: {} traces, convergence_fraction({}, {}) = {:.3}",
                study.traces.len(),
                n_max,
                cfg.eps,
                study.convergence_fraction(n_max, cfg.eps)
            );
        }
        Command::Equivalence => {
            let reports = equivalence_experiment(cfg.equiv_family, cfg.n, cfg.reps, cfg.seed)?;
            write_json(&cfg.out, "equivalence.json", &reports)?;
            println!("equivalence: {} reports written", reports.len());
        }
        Command::Scaling => {
            let summary = scaling_experiment(cfg.n, cfg.reps, cfg.seed)?;
            write_json(&cfg.out, "scaling.json", &summary)?;
            let mut w = csv::Writer::from_path(cfg.out.join("scaling.csv"))
                .map_err(HarnessError::Csv)?;
            w.write_record(["rep", "ratio"]).map_err(HarnessError::Csv)?;
            for (i, r) in summary.ratios.iter().enumerate() {
                w.write_record([i.to_string(), r.to_string()])
                    .map_err(HarnessError::Csv)?;
            }
            w.flush().map_err(|e| CliError::Io(e))?;
            println!(
                "scaling: mean ratio {:.4} over {} reps",
                summary.mean_ratio,
                summary.ratios.len()
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_overrides_beat_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.txt");
        std::fs::write(&path, "run.seed = 1\nfit.link = probit\n").unwrap();
        let ov = Overrides {
            config: Some(path),
            seed: Some(77),
            ..Overrides::default()
        };
        let cfg = resolve_config(Command::Generate, &ov).unwrap();
        assert_eq!(cfg.seed, 77);
        assert_eq!(cfg.link, crate::link::LinkFamily::Probit);
        assert_eq!(cfg.command, Command::Generate);
    }

    #[test]
    fn exit_codes_by_category() {
        let parse = CliError::Config(ConfigError::UnknownKey("x".to_string()));
        assert_eq!(parse.exit_code(), EXIT_PARSE);
        let numeric = CliError::Fit(FitError::NonBinaryOutcome);
        assert_eq!(numeric.exit_code(), EXIT_NUMERIC);
        let io = CliError::Io(std::io::Error::other("disk"));
        assert_eq!(io.exit_code(), EXIT_IO);
    }

    #[test]
    fn generate_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            command: Command::Generate,
            out: dir.path().to_path_buf(),
            n: 50,
            ..RunConfig::default()
        };
        run(&cfg).unwrap();
        assert!(dir.path().join("effective_config.txt").exists());
        assert!(dir.path().join("metadata.json").exists());
        assert!(dir.path().join("data.csv").exists());
    }
}
