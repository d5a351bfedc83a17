use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "corrsense", version, about = "Greedy sensor selection under correlated noise")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Root seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 picks the number of cores. Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Write a JSON manifest of the run here.
    #[arg(long, global = true)]
    pub manifest_out: Option<PathBuf>,
    /// Print the main JSON result on stdout.
    #[arg(long, global = true)]
    pub print_json: bool,
    /// File of `key = value` lines whose keys mirror flag names; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the truncated-SVD model and the truncated-mode noise factor.
    Fit(FitArgs),
    /// Greedy sensor selection (dg or dgnc).
    Select(SelectArgs),
    /// Estimate states from measurements at selected sensors.
    Estimate(EstimateArgs),
    /// Reconstruction error of estimated states against data.
    Evaluate(EvaluateArgs),
    /// Exhaustive best sensor subset for small problems.
    Oracle(OracleArgs),
    /// Random-matrix benchmark of DG and DG/NC with LS and GLS.
    BenchRandom(BenchArgs),
    /// Cross-validation of the data-driven noise model.
    Crossval(CrossvalArgs),
    /// Write a built-in test problem as model and noise files.
    Fixture(FixtureArgs),
    /// Re-run the command recorded in a manifest after checking input digests.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Select(_) => "select",
            Command::Estimate(_) => "estimate",
            Command::Evaluate(_) => "evaluate",
            Command::Oracle(_) => "oracle",
            Command::BenchRandom(_) => "bench-random",
            Command::Crossval(_) => "crossval",
            Command::Fixture(_) => "fixture",
            Command::Replay(_) => "replay",
        }
    }

    pub fn params(&self) -> serde_json::Value {
        let value = match self {
            Command::Fit(a) => serde_json::to_value(a),
            Command::Select(a) => serde_json::to_value(a),
            Command::Estimate(a) => serde_json::to_value(a),
            Command::Evaluate(a) => serde_json::to_value(a),
            Command::Oracle(a) => serde_json::to_value(a),
            Command::BenchRandom(a) => serde_json::to_value(a),
            Command::Crossval(a) => serde_json::to_value(a),
            Command::Fixture(a) => serde_json::to_value(a),
            Command::Replay(a) => serde_json::to_value(a),
        };
        value.expect("argument structs serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmArg {
    Dg,
    Dgnc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Ls,
    Gls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureName {
    Counterexample,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FitArgs {
    /// Snapshot matrix, points by instances (DSM1 or CSV).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub center: bool,
    /// Output directory for the model files.
    #[arg(long)]
    pub out_rom: PathBuf,
    #[arg(long)]
    pub out_noise: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SelectArgs {
    #[arg(long)]
    pub rom: PathBuf,
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long)]
    pub p: usize,
    #[arg(long, value_enum)]
    pub algorithm: AlgorithmArg,
    /// Exclude candidates whose noise RMS is below this fraction of the largest.
    #[arg(long)]
    pub filter_frac: Option<f64>,
    /// Override the ridge stored with the noise factor.
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EstimateArgs {
    #[arg(long)]
    pub rom: PathBuf,
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Sensor set JSON.
    #[arg(long)]
    pub sensors: PathBuf,
    /// Full fields, points by instances; the sensor rows are extracted.
    #[arg(long, conflicts_with = "measurements", required_unless_present = "measurements")]
    pub data: Option<PathBuf>,
    /// Sensor readings, one row per sensor in set order.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub estimator: EstimatorArg,
    /// Estimated states, rank by instances.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write reconstructed fields here.
    #[arg(long)]
    pub out_field: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvaluateArgs {
    #[arg(long)]
    pub rom: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub states: PathBuf,
    /// Sensor set the states came from; fills `p` and `algorithm`.
    #[arg(long)]
    pub sensors: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct OracleArgs {
    #[arg(long)]
    pub rom: PathBuf,
    /// Without a noise factor the identity covariance is used.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = corrsense::selection::DEFAULT_ORACLE_BUDGET)]
    pub budget: u128,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20")]
    pub p_list: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// `linear`, `truncated:K` or `geometric:RATIO`.
    #[arg(long, default_value = "linear")]
    pub sigma_rule: String,
    /// Result CSV; the config is written next to it with a `.json` suffix.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CrossvalArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub folds: usize,
    #[arg(long, default_value_t = 50)]
    pub resamples: usize,
    #[arg(long, value_delimiter = ',', default_value = "20,60,120,200")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 15)]
    pub p: usize,
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub center: bool,
    #[arg(long)]
    pub filter_frac: Option<f64>,
    /// Result CSV; the config is written next to it with a `.json` suffix.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FixtureArgs {
    #[arg(long, value_enum)]
    pub name: FixtureName,
    #[arg(long)]
    pub out_rom: PathBuf,
    #[arg(long)]
    pub out_noise: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}
