use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Static and roll-out operator inference for polynomial reduced models.
///
/// Settings are resolved as flag > config file > built-in default. The
/// config file is `key = value` text with `[train]`, `[roll]`, `[model]`
/// and `[benchmark]` sections using the key names listed with each flag.
#[derive(Debug, Parser)]
#[command(name = "rollinf", version)]
pub struct Cli {
    /// Configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate truth trajectories and write a dataset manifest.
    Generate(GenerateArgs),
    /// Compute a POD basis from the states of a dataset.
    Basis(BasisArgs),
    /// Project a full-state dataset onto a basis.
    Project(ProjectArgs),
    /// Fit one operator set per entry by least squares on difference quotients.
    TrainStatic(TrainStaticArgs),
    /// Fit operators by roll-out training with learning-rate selection.
    TrainRollout(TrainRolloutArgs),
    /// Simulate a model set from the initial states of a dataset.
    Simulate(SimulateArgs),
    /// Time-averaged relative test errors of model sets, with the projection error.
    Evaluate(EvaluateArgs),
    /// Averaged stability-radius bound of a quadratic model.
    Stability(StabilityArgs),
    /// Run the shallow-water benchmark over a grid of one setting.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum System {
    /// Periodic shallow-water equations on a square grid.
    Swe,
    /// Random stable quadratic system (see --n, --margin).
    Quadratic,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output manifest; matrices are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "swe")]
    pub system: System,
    /// First input (swe); one run per (mu1, mu2) pair of the grid.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.5])]
    pub mu1: Vec<f64>,
    /// Second input (swe).
    #[arg(long, value_delimiter = ',', default_values_t = [1.1, 1.7])]
    pub mu2: Vec<f64>,
    /// Grid points per dimension (swe). Config: benchmark.grid
    #[arg(long)]
    pub grid: Option<usize>,
    /// Time-step size [default: 0.005]. Config: benchmark.dt
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of time steps [default: 200]. Config: benchmark.steps
    #[arg(long)]
    pub steps: Option<usize>,
    /// State dimension (quadratic).
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Number of trajectories (quadratic).
    #[arg(long, default_value_t = 4)]
    pub trajectories: usize,
    /// Standard deviation of the initial-state entries (quadratic).
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    /// Eigenvalues of A_1 lie in [-1, -margin] (quadratic).
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Flow map of the quadratic truth [default: imex]. Config: model.scheme
    #[arg(long)]
    pub scheme: Option<String>,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    /// Dataset manifest with full states.
    #[arg(long)]
    pub input: PathBuf,
    /// Basis dimension.
    #[arg(long)]
    pub n: usize,
    /// Output directory (basis.rom1, singular_values.csv).
    #[arg(long)]
    pub out: PathBuf,
    /// Use every stride-th state of each trajectory.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Basis directory.
    #[arg(long)]
    pub basis: PathBuf,
    /// Output manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainStaticArgs {
    /// Reduced training dataset.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory of the model set.
    #[arg(long)]
    pub out: PathBuf,
    /// Sampling period of the data [default: 1]. Config: roll.period
    #[arg(long)]
    pub period: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct TrainRolloutArgs {
    /// Reduced training dataset.
    #[arg(long)]
    pub train: PathBuf,
    /// Full-state validation dataset.
    #[arg(long)]
    pub valid: PathBuf,
    /// Basis directory.
    #[arg(long)]
    pub basis: PathBuf,
    /// Output directory (summary.txt, losses.csv, model set).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub train_opts: TrainArgs,
    #[command(flatten)]
    pub roll: RollArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model-set directory.
    #[arg(long)]
    pub models: PathBuf,
    /// Dataset whose initial states and inputs are used.
    #[arg(long)]
    pub initial: PathBuf,
    /// Basis directory; full initial states are projected and results lifted.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Number of steps [default: those of the initial dataset].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Output manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Full-state test dataset.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub basis: PathBuf,
    /// Model set to evaluate as NAME=DIR; repeatable.
    #[arg(long = "model", required = true, value_parser = parse_named)]
    pub models: Vec<(String, PathBuf)>,
    /// Output CSV: entry, one column per model, projection.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Model-set directory.
    #[arg(long)]
    pub models: PathBuf,
    /// Input at which to interpolate the operators (required for several models).
    #[arg(long, value_delimiter = ',')]
    pub param: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1000)]
    pub realizations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV of per-realization bounds.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Roll-out length R.
    RollLength,
    /// Noise level in percent.
    Noise,
    /// Sampling period.
    SamplingPeriod,
    /// Number of training inputs (must factor as a×b with a, b ≥ 2).
    TrajectoryCount,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated values of the swept setting, one benchmark point each.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Seeds per point; errors are averaged.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (sweep.csv plus point_<i>.csv per point).
    #[arg(long)]
    pub out: PathBuf,
    /// Points run in parallel; ROLLINF_THREADS caps it.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub bench: BenchArgs,
    #[command(flatten)]
    pub train_opts: TrainArgs,
    #[command(flatten)]
    pub roll: RollArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Candidate learning rates, ascending [default: 5 log-spaced in 1e-5..1e-1]. Config: train.learning_rates
    #[arg(long, value_delimiter = ',')]
    pub lrs: Option<Vec<f64>>,
    /// Adam iterations [default: 2000]. Config: train.max_iters
    #[arg(long)]
    pub iters: Option<usize>,
    /// zeros or static [default: zeros; sweep: static]. Config: train.init
    #[arg(long)]
    pub init: Option<String>,
    /// Clip the gradient norm [default: none]. Config: train.grad_clip
    #[arg(long)]
    pub grad_clip: Option<f64>,
    /// Recorded with the report [default: 0]. Config: train.seed
    #[arg(long)]
    pub train_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RollArgs {
    /// Roll-out length R [default: 50]. Config: roll.length
    #[arg(long)]
    pub roll_length: Option<usize>,
    /// Penalized increments [default: 1..=R]. Config: roll.increments
    #[arg(long, value_delimiter = ',')]
    pub increments: Option<Vec<usize>>,
    /// Sampling period of the data [default: 1]. Config: roll.period
    #[arg(long)]
    pub period: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Polynomial degree [default: 2]. Config: model.degree
    #[arg(long)]
    pub degree: Option<usize>,
    /// imex or forward-euler [default: imex]. Config: model.scheme
    #[arg(long)]
    pub scheme: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Grid points per dimension [default: 24]. Config: benchmark.grid
    #[arg(long)]
    pub grid: Option<usize>,
    /// Time-step size [default: 0.005]. Config: benchmark.dt
    #[arg(long)]
    pub dt: Option<f64>,
    /// Time steps per run [default: 200]. Config: benchmark.steps
    #[arg(long)]
    pub steps: Option<usize>,
    /// Basis dimension [default: 10]. Config: benchmark.basis_dim
    #[arg(long)]
    pub basis_dim: Option<usize>,
    /// Noise level as a fraction [default: 0]. Config: benchmark.noise
    #[arg(long)]
    pub noise: Option<f64>,
    /// Training grid AxB [default: 2x2]. Config: benchmark.train_grid
    #[arg(long)]
    pub train_grid: Option<String>,
    /// Validation inputs [default: 2]. Config: benchmark.valid
    #[arg(long)]
    pub valid: Option<usize>,
    /// Test inputs [default: 2]. Config: benchmark.test
    #[arg(long)]
    pub test: Option<usize>,
}

fn parse_named(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, dir)) if !name.is_empty() && !dir.is_empty() => Ok((name.to_string(), PathBuf::from(dir))),
        _ => Err(format!("expected NAME=DIR, got `{s}`")),
    }
}
