use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "interurn", version, about = "Interacting urns with triggering: simulate, analyze, estimate")]
pub struct Cli {
    /// Worker threads for replications and restarts (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// JSON file of option values; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Also write a gnuplot script skeleton next to each plot CSV.
    #[arg(long, global = true)]
    pub gnuplot_stub: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the dynamics and write event logs.
    Simulate(SimulateArgs),
    /// Empirical diagnostics of an event log.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Leading eigenvalue, Perron vectors and growth exponents of Γ.
    Spectral(SpectralArgs),
    /// Integrate the mean-field ODE and write the trajectory.
    Ode(OdeArgs),
    /// Estimate Γ and W of a two-agent log.
    Estimate(EstimateArgs),
    /// Repeated simulate-and-estimate experiments.
    Study(StudyArgs),
    /// Convert external streams into an observation log.
    #[command(subcommand)]
    Ingest(IngestCommand),
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Common-slope Heaps fit of the novelty and adoption counts.
    Heaps(HeapsArgs),
    /// The process log10(D*_h / D*_j).
    Ratio(RatioArgs),
    /// Quantiles of one agent's share of each item, binned by occupancy.
    Composition(CompositionArgs),
}

#[derive(Debug, Subcommand)]
pub enum IngestCommand {
    /// Tokenize two text files, equalize their lengths and pair them.
    Tokens(TokensArgs),
    /// Validate a `t,agent,item` CSV or two parallel item files.
    Csv(CsvArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Series {
    Four,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Pipeline,
    TrueSpectral,
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Model spec JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Horizon T (accepts 1e5).
    #[arg(long, default_value = "10000", value_parser = parse_count)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Several seeds: `1..100` (inclusive) or `1,5,9`; overrides --seed.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Skip the JSON log (spec, seed and events) next to each CSV.
    #[arg(long)]
    pub no_json: bool,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct HeapsArgs {
    /// Event log: CSV with `t,agent,item` columns, or a simulator JSON log.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Start of the fit window (default max(100, T/1000)).
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub n_points: usize,
    #[arg(long, value_enum, default_value = "four")]
    pub series: Series,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct RatioArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Numerator and denominator agents.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub agents: Vec<usize>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct CompositionArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Items adopted fewer times are ignored.
    #[arg(long, default_value_t = 10)]
    pub min_occupancy: u64,
    /// Bin width in log10 occupancy.
    #[arg(long, default_value_t = 0.5)]
    pub bin: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.25,0.5,0.75,0.95")]
    pub levels: Vec<f64>,
    /// Agent whose share is reported.
    #[arg(long, default_value_t = 1)]
    pub agent: usize,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SpectralArgs {
    /// Model spec JSON; its Γ is analyzed.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Γ as an inline JSON array of rows, instead of --spec.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct OdeArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 1e8)]
    pub t1: f64,
    /// Number of log-spaced samples.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Initial values at t0 (default all ones).
    #[arg(long, value_delimiter = ',')]
    pub d0: Option<Vec<f64>>,
    /// Output CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// θ₁,θ₂ used in the likelihood.
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Fit all four family parameters (experimental).
    #[arg(long)]
    pub unsymmetric: bool,
    /// Also estimate θ (experimental).
    #[arg(long)]
    pub estimate_theta: bool,
    /// Skip steps 1-2 and fit with this γ* (needs --r).
    #[arg(long, requires = "r")]
    pub gamma_star: Option<f64>,
    /// u₁/u₂ to fit with, at most 1 (needs --gamma-star).
    #[arg(long, requires = "gamma_star")]
    pub r: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub n_points: usize,
    #[arg(long, value_enum, default_value = "four")]
    pub series: Series,
    /// Seed of the restart grid.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct StudyArgs {
    /// JSON array of {g11, g22, g12, w12}; default: the ten reference scenarios.
    #[arg(long)]
    pub rows: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value = "10000", value_parser = parse_count)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub theta_data: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta_lik: f64,
    #[arg(long, value_enum, default_value = "pipeline")]
    pub mode: Mode,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value = "four")]
    pub series: Series,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct TokensArgs {
    /// Text of agent 1.
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Text of agent 2.
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Seed of the random thinning of the longer stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub min_len: usize,
    /// Keep digits as word characters.
    #[arg(long)]
    pub keep_numbers: bool,
    /// Drop steps where a new item appears for both agents instead of failing.
    #[arg(long)]
    pub drop_colliding: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct CsvArgs {
    /// CSV with a header containing t,agent,item.
    #[arg(long, conflicts_with = "parallel")]
    pub input: Option<PathBuf>,
    /// Two one-item-per-line files, agent 1 then agent 2.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub parallel: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub drop_colliding: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
