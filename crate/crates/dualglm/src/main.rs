//! Thin binary wrapper: argument parsing and exit-code mapping only; all
//! behavior lives in the library (`dualglm::cli`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dualglm::cli::{resolve_config, run, Overrides};
use dualglm::config::Command;

#[derive(Parser)]
#[command(name = "dualglm", version, about = "Dual-measure GLM estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate a seeded dataset as CSV
    Generate(CommonArgs),
    /// Fit one estimator to a CSV dataset
    Fit(CommonArgs),
    /// Decompose a signed-measure file (Hahn/Jordan, total variation)
    Decompose(CommonArgs),
    /// Run a multi-replication convergence study
    Study(CommonArgs),
    /// Binary-vs-latent equivalence experiment
    Equivalence(CommonArgs),
    /// Logit/probit slope-ratio scaling experiment
    Scaling(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key-value config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for all randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Estimator tag: mle | latent_em | dual_measure
    #[arg(long)]
    estimator: Option<String>,
    /// Link family: logit | probit | cloglog | identity
    #[arg(long)]
    link: Option<String>,
    /// Side-splitting rule for the dual fit: zero | median
    #[arg(long)]
    cutoff: Option<String>,
    /// Comma-separated strictly increasing sample sizes
    #[arg(long)]
    sizes: Option<String>,
    /// Replication count
    #[arg(long)]
    reps: Option<usize>,
    /// Input dataset CSV (fit)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Input signed-measure file (decompose)
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Sample size (generate, equivalence, scaling)
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated true coefficients, intercept first
    #[arg(long)]
    beta: Option<String>,
    /// Latent error family: logistic | normal | gumbel
    #[arg(long)]
    error_family: Option<String>,
    /// Equivalence experiment family: normal | gumbel
    #[arg(long)]
    family: Option<String>,
}

impl CommonArgs {
    fn overrides(self) -> Overrides {
        Overrides {
            config: self.config,
            seed: self.seed,
            out: self.out,
            estimator: self.estimator,
            link: self.link,
            cutoff: self.cutoff,
            sizes: self.sizes,
            reps: self.reps,
            data: self.data,
            measure: self.measure,
            n: self.n,
            beta: self.beta,
            error_family: self.error_family,
            family: self.family,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Generate(a) => (Command::Generate, a),
        Sub::Fit(a) => (Command::Fit, a),
        Sub::Decompose(a) => (Command::Decompose, a),
        Sub::Study(a) => (Command::Study, a),
        Sub::Equivalence(a) => (Command::Equivalence, a),
        Sub::Scaling(a) => (Command::Scaling, a),
    };
    let cfg = match resolve_config(command, &args.overrides()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
