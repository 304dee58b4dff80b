use std::path::PathBuf;

use censored_evi::bootstrap::{Gamma2Source, DEFAULT_ALPHA, DEFAULT_EPSILON, DEFAULT_REPLICATES};
use censored_evi::estimators::{Family, Target, DEFAULT_OMEGA};
use censored_evi::kaplan_meier::SurvivalTarget;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cevi",
    version,
    about = "Tail index estimation for randomly right-censored heavy-tailed data"
)]
pub struct Cli {
    /// Worker threads for parallel sections (defaults to all cores).
    #[arg(long, global = true, env = "CEVI_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the tail index over a range of k.
    Estimate(EstimateArgs),
    /// Kaplan-Meier survival at every order statistic.
    Km(KmArgs),
    /// Parametric Pareto bootstrap confidence interval for gamma1.
    BootstrapCi(BootstrapCiArgs),
    /// Monte-Carlo bias/RMSE or bootstrap coverage study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV with header `z,delta` (delta is 1 for uncensored, 0 for censored).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub family: Family,
    /// Second-order parameter; repeat for a sensitivity sweep. Defaults to
    /// -0.5, -1, -1.5, -2, -3 for families that need it.
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Vec<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Conjugate gamma prior shape (bayes-mean, bayes-mode).
    #[arg(long)]
    pub a: Option<f64>,
    /// Conjugate gamma prior rate (bayes-mean, bayes-mode).
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, value_enum, default_value_t = TargetArg::Gamma1)]
    pub target: TargetArg,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    /// Defaults to n - 1.
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KmArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = SurvivalArg::Event)]
    pub target: SurvivalArg,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct BootstrapArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
    pub rho1: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
    pub rho2: f64,
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    pub omega: f64,
    /// Tolerance for the adaptive choice of k.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Number of bootstrap replicates.
    #[arg(long = "N", default_value_t = DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = KModeArg::Adaptive)]
    pub k_mode: KModeArg,
    /// Fixed-mode threshold for gamma1; defaults to round(0.05 n).
    #[arg(long)]
    pub k1: Option<usize>,
    /// Fixed-mode threshold for gamma2; defaults to round(0.05 n).
    #[arg(long)]
    pub k2: Option<usize>,
    /// Estimator of gamma2 used for the censoring distribution.
    #[arg(long, value_enum, default_value_t = Gamma2SourceArg::Worms)]
    pub gamma2_source: Gamma2SourceArg,
}

#[derive(Debug, Args)]
pub struct BootstrapCiArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the interval record as JSON here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Named scenario: burr-heavy, burr-even, burr-light or frechet.
    #[arg(long, conflicts_with = "scenario_file", required_unless_present = "scenario_file")]
    pub scenario: Option<String>,
    /// TOML scenario file.
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
    /// Replications (bias-rmse) or simulated datasets (coverage).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Study type; defaults to the scenario file's mode, then bias-rmse.
    #[arg(long, value_enum)]
    pub mode: Option<SimMode>,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Gamma1,
    Gamma2,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Gamma1 => Target::Gamma1,
            TargetArg::Gamma2 => Target::Gamma2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurvivalArg {
    Event,
    Censor,
}

impl From<SurvivalArg> for SurvivalTarget {
    fn from(t: SurvivalArg) -> Self {
        match t {
            SurvivalArg::Event => SurvivalTarget::Event,
            SurvivalArg::Censor => SurvivalTarget::Censor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KModeArg {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Gamma2SourceArg {
    Worms,
    BiasReduced,
    Shrinkage,
}

impl From<Gamma2SourceArg> for Gamma2Source {
    fn from(s: Gamma2SourceArg) -> Self {
        match s {
            Gamma2SourceArg::Worms => Gamma2Source::Worms,
            Gamma2SourceArg::BiasReduced => Gamma2Source::BiasReduced,
            Gamma2SourceArg::Shrinkage => Gamma2Source::Shrinkage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    BiasRmse,
    Coverage,
}
