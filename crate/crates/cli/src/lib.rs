//! `xiboot` command line: rank correlation, bootstrap inference, model
//! calibration and coverage studies, with JSON/CSV reports.

pub mod commands;
pub mod error;
pub mod input;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use xiboot_core::seed::DEFAULT_SEED;
use xiboot_core::selection::{DEFAULT_BICKEL_SAKOV_Q, DEFAULT_M_FLOOR};
use xiboot_core::simulation::{DEFAULT_CALIBRATION_M, DEFAULT_CALIBRATION_N, DEFAULT_POISSON_LAMBDA};
use xiboot_core::{MSelectionRule, ModelSpec};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "xiboot", version, about = "Chatterjee's rank correlation with m-out-of-n bootstrap inference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the rank correlation of a two-column CSV.
    Xi(XiArgs),
    /// Estimate the limiting variance and a confidence interval by m-out-of-n bootstrap.
    Bootstrap(BootstrapArgs),
    /// Simulate ground-truth xi and sigma^2 for a model.
    Calibrate(CalibrateArgs),
    /// Run a Monte Carlo coverage/accuracy study.
    Study(StudyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExecArgs {
    /// Base seed; every random stream is derived from it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (defaults to the number of logical cores).
    #[arg(long, env = "XIBOOT_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Fixed,
    BickelSakov,
    Cluster,
}

#[derive(Debug, Clone, Args)]
pub struct RuleArgs {
    #[arg(long, value_enum, default_value_t = RuleKind::Cluster)]
    pub rule: RuleKind,
    /// Exponent for `--rule fixed` (m = floor(n^gamma)).
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Comma-separated exponent grid for `--rule cluster` (default 0.40,0.45,...,0.90).
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Ratio for `--rule bickel-sakov`.
    #[arg(long, default_value_t = DEFAULT_BICKEL_SAKOV_Q)]
    pub q: f64,
    /// Smallest subsample size is strictly above this for `--rule bickel-sakov`.
    #[arg(long = "m-floor", default_value_t = DEFAULT_M_FLOOR)]
    pub m_floor: usize,
}

impl RuleArgs {
    pub fn rule(&self) -> MSelectionRule {
        match self.rule {
            RuleKind::Fixed => MSelectionRule::FixedPower { gamma: self.gamma },
            RuleKind::BickelSakov => MSelectionRule::BickelSakov {
                q: self.q,
                m_floor: self.m_floor,
            },
            RuleKind::Cluster => match &self.gammas {
                Some(g) => MSelectionRule::Cluster { gammas: g.clone() },
                None => MSelectionRule::cluster(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gaussian,
    T,
    Poisson,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Degrees of freedom for `--model t`.
    #[arg(long, default_value_t = 3.0)]
    pub nu: f64,
    /// Poisson mean for `--model poisson`.
    #[arg(long, default_value_t = DEFAULT_POISSON_LAMBDA)]
    pub lambda: f64,
}

impl ModelArgs {
    pub fn model(&self) -> ModelSpec {
        match self.model {
            ModelKind::Gaussian => ModelSpec::Gaussian { rho: self.rho },
            ModelKind::T => ModelSpec::StudentT {
                nu: self.nu,
                rho: self.rho,
            },
            ModelKind::Poisson => ModelSpec::PoissonMixture {
                lambda: self.lambda,
                rho: self.rho,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct XiArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub exec: ExecArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BootstrapArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub rule: RuleArgs,
    /// Bootstrap replicates per candidate m.
    #[arg(long = "B", alias = "replicates", default_value_t = xiboot_core::resampling::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub exec: ExecArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrationArgs {
    /// Sample size of each simulated copy of xi_n.
    #[arg(long = "n-cal", default_value_t = DEFAULT_CALIBRATION_N)]
    pub n_cal: usize,
    /// Number of simulated copies.
    #[arg(long = "M-cal", alias = "m-cal", default_value_t = DEFAULT_CALIBRATION_M)]
    pub m_cal: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub calibration: CalibrationArgs,
    /// Also write the result to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub exec: ExecArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sample size of each run.
    #[arg(long)]
    pub n: usize,
    /// Number of simulation runs.
    #[arg(long = "M", alias = "runs", default_value_t = 1000)]
    pub runs: usize,
    #[arg(long = "B", alias = "replicates", default_value_t = xiboot_core::resampling::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[command(flatten)]
    pub rule: RuleArgs,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// CalibrationResult JSON produced by `xiboot calibrate`.
    #[arg(long, required_unless_present = "calibrate", conflicts_with = "calibrate")]
    pub truth: Option<PathBuf>,
    /// Calibrate the model inline instead of reading `--truth`.
    #[arg(long)]
    pub calibrate: bool,
    #[command(flatten)]
    pub calibration: CalibrationArgs,
    /// Output directory for `runs.csv` and `report.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub exec: ExecArgs,
}

/// Parses `args` and runs the command, returning what should go to stdout.
pub fn run_from<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    commands::dispatch(&cli.command)
}
