//! Command-line surface. Every parsed value is serializable so the resolved
//! configuration can be hashed into the run manifest.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use suretynet::cascade::{Horizon, SimulationConfig, DEFAULT_QUANTILES};
use suretynet::meanfield::{SolverChoice, SolverConfig};
use suretynet::netgraph::ValidationOptions;
use suretynet::synthgen::AssumptionMode;

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "suretynet", version, about = "Systemic risk analysis for surety contractor networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Network as a `.json` file or a directory with `nodes.csv` and `edges.csv`.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    #[serde(skip)]
    pub output_dir: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Encoding of tabular outputs and written networks.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Alpha for intermediaries whose record leaves it blank.
    #[arg(long, global = true)]
    pub intermediary_alpha: Option<f64>,
    /// Keep supplied attributes that contradict a node's role.
    #[arg(long, global = true)]
    pub allow_override: bool,
    /// Reject nodes whose incoming weights do not sum to one.
    #[arg(long, global = true)]
    pub require_stochastic: bool,
}

impl GlobalArgs {
    pub fn validation(&self) -> ValidationOptions {
        ValidationOptions {
            allow_override: self.allow_override,
            require_stochastic: self.require_stochastic,
            intermediary_alpha: self.intermediary_alpha,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check a network and write `diagnostics.json`.
    Validate,
    /// Solve the mean-field fixed point.
    Meanfield(MeanfieldArgs),
    /// Rank principals by loss centrality.
    Centrality(CentralityArgs),
    /// Monte Carlo losses at time zero and at the mixing horizon.
    Simulate(SimulateArgs),
    /// Exact stationary joint law of a small network.
    Exact(ExactArgs),
    /// Random layered network, or an anonymized replica of `--input`.
    Generate(GenerateArgs),
    /// Add dummy principals for unobserved contracting shares.
    Impute,
    /// Mean field, centrality, simulated quantiles and the loss uplift.
    Report(ReportArgs),
    /// Stationary quantiles over an evenly spaced intermediary alpha grid.
    SweepAlpha(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Meanfield(_) => "meanfield",
            Command::Centrality(_) => "centrality",
            Command::Simulate(_) => "simulate",
            Command::Exact(_) => "exact",
            Command::Generate(_) => "generate",
            Command::Impute => "impute",
            Command::Report(_) => "report",
            Command::SweepAlpha(_) => "sweep-alpha",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Auto,
    Direct,
    Neumann,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
    /// Neumann iteration cap; derived from the network when omitted.
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            method: match self.method {
                MethodArg::Auto => SolverChoice::Auto,
                MethodArg::Direct => SolverChoice::Direct,
                MethodArg::Neumann => SolverChoice::Neumann,
            },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MeanfieldArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CentralityArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

fn parse_horizon(s: &str) -> Result<Horizon, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Horizon::Auto);
    }
    s.parse::<usize>()
        .map(Horizon::Steps)
        .map_err(|_| format!("expected `auto` or a step count, got `{s}`"))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    /// Total-variation target for the automatic horizon on cyclic networks.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value = "auto", value_parser = parse_horizon)]
    pub horizon: Horizon,
    /// Uniform alpha for every intermediary.
    #[arg(long)]
    pub alpha_override: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QUANTILES.to_vec())]
    pub quantiles: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
}

impl SimArgs {
    pub fn config(&self, seed: u64) -> SimulationConfig {
        SimulationConfig {
            replications: self.reps,
            horizon: self.horizon,
            seed,
            epsilon: self.epsilon,
            alpha_override: self.alpha_override,
            quantiles: self.quantiles.clone(),
            confidence: self.confidence,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Also run the monotone coupling and write `dominance.csv`.
    #[arg(long)]
    pub dominance: bool,
    /// Loss thresholds for the survival curves; defaults to the stationary
    /// quantile points.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    /// Treat `--input` as a snapshot directory (`nodes.csv`, `edges_t0.csv`,
    /// `edges_t1.csv`, ...) and run the coalescence coupling instead.
    #[arg(long)]
    pub time_varying: bool,
    /// Alpha bound for the snapshot sequence; defaults to the largest alpha
    /// on any snapshot.
    #[arg(long)]
    pub alpha_bar: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExactArgs {
    /// Also write the product law of the mean-field marginals.
    #[arg(long)]
    pub independent: bool,
    /// Step cap for cyclic networks.
    #[arg(long)]
    pub t_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Satisfy,
    Violate,
    Mixed,
    Free,
}

impl From<ModeArg> for AssumptionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Satisfy => AssumptionMode::Satisfy,
            ModeArg::Violate => AssumptionMode::Violate,
            ModeArg::Mixed => AssumptionMode::Mixed,
            ModeArg::Free => AssumptionMode::Free,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    /// Generator spec as JSON; the flags below override its fields.
    #[arg(long)]
    #[serde(skip)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub max_in_degree: Option<usize>,
    #[arg(long)]
    pub principal_fraction: Option<f64>,
    #[arg(long)]
    pub intermediary_fraction: Option<f64>,
    #[arg(long)]
    pub obligee_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub assumption_mode: Option<ModeArg>,
    #[arg(long)]
    pub unobserved_share: Option<f64>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub noise_scale_r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_scale_beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_scale_bond: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rescale_r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rescale_beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rescale_bond: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Impute unobserved shares before the analysis.
    #[arg(long)]
    pub impute: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Number of grid points on [0, 1], endpoints included.
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
}
