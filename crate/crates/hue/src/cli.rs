//! Command-line definition. Every flag can also be set through an
//! environment variable with the `HUE_` prefix, e.g. `HUE_TAU=100000`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "hue", version, about = "Accuracy metrics under human rating uncertainty")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Rating tensor CSV (`user,item,trial,rating`).
    #[arg(long, global = true, env = "HUE_TENSOR")]
    pub tensor: Option<PathBuf>,
    /// Monte-Carlo trials [default: 1000000; 100000 for simulations 4-7 and leaderboard]
    #[arg(long, global = true, env = "HUE_TAU")]
    #[serde(skip)]
    pub tau: Option<usize>,
    /// Histogram bins for densities.
    #[arg(long, global = true, env = "HUE_BINS", default_value_t = 55)]
    pub bins: usize,
    /// Significance level.
    #[arg(long, global = true, env = "HUE_ALPHA", default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, global = true, env = "HUE_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Metric; `compare` reports all four when omitted.
    #[arg(long, global = true, env = "HUE_METRIC", value_enum)]
    pub metric: Option<MetricArg>,
    /// sRMSE handling of pairs.
    #[arg(long, global = true, env = "HUE_MODE", value_enum, default_value_t = ModeArg::Conditional)]
    pub mode: ModeArg,
    /// How trials of two systems are matched when estimating P_ε.
    #[arg(long, global = true, env = "HUE_PAIRING", value_enum, default_value_t = PairingArg::Independent)]
    pub pairing: PairingArg,
    /// Output directory, created if missing.
    #[arg(long, global = true, env = "HUE_OUT", default_value = "hue-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long, global = true, env = "HUE_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Omit the generation time from JSON reports.
    #[arg(long, global = true, env = "HUE_NO_TIMESTAMP")]
    #[serde(skip)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Rmse,
    Srmse,
    Mae,
    Msd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Conditional,
    Filtered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingArg {
    Independent,
    Paired,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare two predictor files on the tensor's rating distributions.
    Compare(CompareArgs),
    /// Run one of the simulations 1-7.
    Simulate(SimulateArgs),
    /// Which leaderboard differences are evident, per assumed offset.
    Leaderboard(LeaderboardArgs),
    /// Normality and drift checks on a tensor.
    Validate(ValidateArgs),
    /// Write a synthetic tensor.
    Synthesize(SynthesizeArgs),
    /// Closed-form RMSE distribution against Monte Carlo.
    Analytic(AnalyticArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Predictor CSV (`user,item,prediction`) of the first system.
    #[arg(long, env = "HUE_FIRST")]
    pub first: PathBuf,
    #[arg(long, env = "HUE_SECOND")]
    pub second: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SyntheticArgs {
    /// Calibration profile (TOML) for the synthetic tensor used without --tensor.
    #[arg(long, env = "HUE_PROFILE")]
    pub profile: Option<PathBuf>,
    #[arg(long, env = "HUE_USERS", default_value_t = 67)]
    pub users: u32,
    #[arg(long, env = "HUE_TRIALS", default_value_t = 5)]
    pub trials: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StudyArgs {
    /// Independent noise draws averaged per curve point.
    #[arg(long, env = "HUE_NOISE_SEEDS", default_value_t = 3)]
    pub noise_seeds: usize,
    /// P_ε level below which a difference counts as evident.
    #[arg(long, env = "HUE_THRESHOLD", default_value_t = 0.05)]
    pub threshold: f64,
    /// Trials per expectation estimate in the adaptive noise search.
    #[arg(long, env = "HUE_EXPECTATION_TAU", default_value_t = 20_000)]
    pub expectation_tau: usize,
    /// Upper end of the adaptive noise search.
    #[arg(long, env = "HUE_P_MAX", default_value_t = 2.0)]
    pub p_max: f64,
    /// Relative tolerance on the achieved gap.
    #[arg(long, env = "HUE_GAP_TOLERANCE", default_value_t = 1e-3)]
    pub gap_tolerance: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Simulation number, 1-7.
    #[arg(long, env = "HUE_SIM")]
    pub sim: u8,
    /// Sample sizes for simulations 2 and 3.
    #[arg(long, env = "HUE_N_GRID", value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// Noise levels for simulations 4 and 7.
    #[arg(long, env = "HUE_P_GRID", value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    /// Noise differences for simulation 5.
    #[arg(long, env = "HUE_DELTAS", value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Relative gaps of expected scores for simulation 6.
    #[arg(long, env = "HUE_GAPS", value_delimiter = ',')]
    pub gaps: Option<Vec<f64>>,
    /// Base noise offsets for simulations 5 and 6.
    #[arg(long, env = "HUE_OFFSETS", value_delimiter = ',')]
    pub offsets: Option<Vec<f64>>,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[command(flatten)]
    pub study: StudyArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LeaderboardArgs {
    /// Leaderboard CSV (`label,rmse`).
    #[arg(long, env = "HUE_ENTRIES")]
    pub entries: PathBuf,
    /// Assumed base offsets of the winner.
    #[arg(long, env = "HUE_OFFSETS", value_delimiter = ',', required = true)]
    pub offsets: Vec<f64>,
    /// Relative gaps on which P_ε is measured.
    #[arg(long, env = "HUE_GAPS", value_delimiter = ',')]
    pub gaps: Option<Vec<f64>>,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[command(flatten)]
    pub study: StudyArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    /// Simulated null replications for the fitted-parameter KS test.
    #[arg(long, env = "HUE_LILLIEFORS_REPS", default_value_t = 4000)]
    pub lilliefors_reps: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    /// Draw unrounded Gaussian ratings instead of scale values.
    #[arg(long, env = "HUE_CONTINUOUS")]
    pub continuous: bool,
    /// Add `--shift` to every rating of this trial.
    #[arg(long, env = "HUE_SHIFT_TRIAL", requires = "shift")]
    pub shift_trial: Option<usize>,
    #[arg(long, env = "HUE_SHIFT", requires = "shift_trial")]
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticArgs {
    /// Numbers of pairs to check.
    #[arg(long, env = "HUE_N", value_delimiter = ',', default_value = "1,2,5,25,100")]
    pub n: Vec<u64>,
}
