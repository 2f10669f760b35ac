//! Command-line front end: ingest, fit, equate, prevalence, simulate.

pub mod cmd;
pub mod reference;
pub mod report;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scale_equate::MissingPolicy;

#[derive(Parser)]
#[command(
    name = "scale-equate",
    version,
    about = "Rasch fitting and raw-score equating for dichotomous survey scales"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Fit the Rasch model to one response file and screen item fit
    Fit(FitArgs),
    /// Equate two separately sampled forms through a selected anchor set
    EquateNeat(EquateNeatArgs),
    /// Equate the short and full forms answered by a single group
    EquateSg(EquateSgArgs),
    /// Prevalence of severity beyond latent thresholds
    Prevalence(PrevalenceArgs),
    /// Draw a synthetic response file from known parameters
    Simulate(SimulateArgs),
}

/// How missing responses are handled before fitting and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MissingArg {
    /// Drop rows with any missing response
    Exclude,
    /// Treat missing responses as denials
    AsDenied,
}

impl From<MissingArg> for MissingPolicy {
    fn from(arg: MissingArg) -> Self {
        match arg {
            MissingArg::Exclude => MissingPolicy::ExcludeRow,
            MissingArg::AsDenied => MissingPolicy::AsDenied,
        }
    }
}

impl fmt::Display for MissingArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissingArg::Exclude => write!(f, "exclude"),
            MissingArg::AsDenied => write!(f, "as-denied"),
        }
    }
}

#[derive(Args)]
pub struct FitArgs {
    /// Scale definition (TOML)
    #[arg(long)]
    pub scale: PathBuf,
    /// Response file (CSV)
    #[arg(long)]
    pub data: PathBuf,
    /// Missing-response policy
    #[arg(long, value_enum, default_value_t = MissingArg::Exclude)]
    pub missing: MissingArg,
    /// Seed echoed into the report (this command draws nothing)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EquateNeatArgs {
    /// Scale definitions: source form first, target form second
    #[arg(long, required = true)]
    pub scale: Vec<PathBuf>,
    /// Source-form response file (CSV)
    #[arg(long = "data-x")]
    pub data_x: PathBuf,
    /// Target-form response file (CSV)
    #[arg(long = "data-y")]
    pub data_y: PathBuf,
    /// Anchor displacement tolerance in logits
    #[arg(long = "anchor-tol", default_value_t = 0.5)]
    pub anchor_tol: f64,
    /// Item codes unique a priori, excluded from anchoring (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub unique: Vec<String>,
    /// Latent thresholds on the target metric (default -0.25,1.83)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Option<Vec<f64>>,
    /// Bootstrap replications for the SEE (0 disables)
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Bootstrap seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Missing-response policy
    #[arg(long, value_enum, default_value_t = MissingArg::Exclude)]
    pub missing: MissingArg,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EquateSgArgs {
    /// Scale definition of the full (children) form, marking
    /// children-referenced items
    #[arg(long)]
    pub scale: PathBuf,
    /// Response file for the full form (CSV)
    #[arg(long)]
    pub data: PathBuf,
    /// Adult-form raw-score thresholds (default: built-in classification
    /// for the scale family)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Option<Vec<f64>>,
    /// Bootstrap replications for the SEE (0 disables)
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Bootstrap seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Missing-response policy
    #[arg(long, value_enum, default_value_t = MissingArg::Exclude)]
    pub missing: MissingArg,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PrevalenceArgs {
    /// Scale definition, optionally followed by a second --scale with the
    /// reference severities to link against
    #[arg(long, required = true)]
    pub scale: Vec<PathBuf>,
    /// Response file (CSV)
    #[arg(long)]
    pub data: PathBuf,
    /// Latent thresholds (default -0.25,1.83 on the reference metric)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Option<Vec<f64>>,
    /// Anchor displacement tolerance for linking
    #[arg(long = "anchor-tol", default_value_t = 0.5)]
    pub anchor_tol: f64,
    /// Item codes unique a priori, excluded from anchoring (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub unique: Vec<String>,
    /// Seed echoed into the report (this command draws nothing)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Missing-response policy
    #[arg(long, value_enum, default_value_t = MissingArg::Exclude)]
    pub missing: MissingArg,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Simulation spec (TOML)
    #[arg(long)]
    pub data: PathBuf,
    /// Overrides the seed in the spec
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs one parsed subcommand.
pub fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Fit(args) => cmd::fit::run(&args),
        Command::EquateNeat(args) => cmd::neat::run(&args),
        Command::EquateSg(args) => cmd::sg::run(&args),
        Command::Prevalence(args) => cmd::prevalence::run(&args),
        Command::Simulate(args) => cmd::simulate::run(&args),
    }
}
