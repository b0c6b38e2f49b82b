//! `urmon`: calibrate control limits, monitor a series, run Monte Carlo
//! experiments and replicate the published tables.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid usage.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unitroot_monitor::{
    CpVariant, Direction, LagRule, ResidualMode, ResidualWindow, TableId, VarianceScaling,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.into())
            }
        }
    )*};
}

runtime_from!(
    unitroot_monitor::IoError,
    unitroot_monitor::ExperimentError,
    unitroot_monitor::MonitorError,
    std::io::Error
);

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

#[derive(Parser)]
#[command(
    name = "urmon",
    version,
    about = "Sequential monitoring for stationarity and unit roots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a control limit from the limit law and store it in the cache.
    Calibrate(CalibrateArgs),
    /// Run the stopping rule on a series file.
    Monitor(MonitorArgs),
    /// Monte Carlo size, power, run-length and delay of one configuration.
    Simulate(SimulateArgs),
    /// Replicate one of the published simulation tables.
    Replicate(ReplicateArgs),
}

#[derive(Args)]
pub struct CalibrateArgs {
    /// Limit functional: u1, u2, u2_tilde, u2_mu, uz, u01 or u10.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub zeta: f64,
    #[arg(long, default_value = "epanechnikov")]
    pub kernel: String,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, default_value_t = 50_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "none")]
    pub residual: ResidualMode,
    /// `elapsed` calibrates `s·Ũ(s)` (u2_tilde only).
    #[arg(long, default_value = "horizon")]
    pub scaling: VarianceScaling,
    /// Change point of u01/u10.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Local-to-unity coefficient of uz.
    #[arg(long)]
    pub a: Option<f64>,
    /// Nuisance ratio of u2.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long, default_value = "calibration.csv")]
    pub cache: PathBuf,
}

/// Monitoring options shared by `monitor` and `simulate`.
#[derive(Args)]
pub struct MonitorOpts {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// i0 (detect stationarity) or i1 (detect a unit root).
    #[arg(long)]
    pub direction: Option<Direction>,
    /// Bandwidth h in observations.
    #[arg(long = "h", visible_alias = "bandwidth")]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub kernel: Option<String>,
    /// First monitored index k (default ⌊1.5h⌋).
    #[arg(long, conflicts_with = "kappa")]
    pub start: Option<usize>,
    /// Start as a fraction of the horizon, k = ⌈κN⌉.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Newey-West lag rule: m3, m4, m12 or fixed:<m>.
    #[arg(long)]
    pub lag: Option<LagRule>,
    #[arg(long)]
    pub residual: Option<ResidualMode>,
    #[arg(long = "residual-window")]
    pub residual_window: Option<ResidualWindow>,
    /// Newey-West normalisation: horizon or elapsed.
    #[arg(long)]
    pub scaling: Option<VarianceScaling>,
    /// Control limit; looked up in the cache when absent.
    #[arg(long = "c")]
    pub control_limit: Option<f64>,
    /// ζ of the limit law used for the cache lookup (default N/h).
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Calibrate and cache the control limit if it is missing.
    #[arg(long)]
    pub calibrate_missing: bool,
    #[arg(long = "cal-reps")]
    pub cal_reps: Option<usize>,
    #[arg(long = "cal-grid")]
    pub cal_grid: Option<usize>,
    #[arg(long = "cal-seed")]
    pub cal_seed: Option<u64>,
}

#[derive(Args)]
pub struct MonitorArgs {
    #[command(flatten)]
    pub opts: MonitorOpts,
    /// One observation per line, optional `value` header.
    #[arg(long)]
    pub series: PathBuf,
    /// Horizon N (default: the series length).
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Write `n,statistic` for every evaluated n.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub opts: MonitorOpts,
    /// arma11, cp_i1_to_i0, cp_i0_to_i1, local_to_unity or local_trend.
    #[arg(long)]
    pub dgp: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long = "phi-post")]
    pub phi_post: Option<f64>,
    #[arg(long = "phi-pre")]
    pub phi_pre: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub slope: Option<f64>,
    #[arg(long)]
    pub variant: Option<CpVariantArg>,
    /// Student-t innovations with this many degrees of freedom.
    #[arg(long)]
    pub df: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report CSV (default: stdout only).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
pub enum CpVariantArg {
    ArSwitch,
    Model,
}

impl From<CpVariantArg> for CpVariant {
    fn from(v: CpVariantArg) -> Self {
        match v {
            CpVariantArg::ArSwitch => CpVariant::ArSwitch,
            CpVariantArg::Model => CpVariant::Model,
        }
    }
}

#[derive(Args)]
pub struct ReplicateArgs {
    /// Table number, 1 to 4.
    #[arg(long)]
    pub table: TableId,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "calibration.csv")]
    pub cache: PathBuf,
    /// Calibrate and cache any missing control limits first.
    #[arg(long)]
    pub calibrate_missing: bool,
    #[arg(long = "cal-reps", default_value_t = 50_000)]
    pub cal_reps: usize,
    #[arg(long = "cal-grid", default_value_t = 1000)]
    pub cal_grid: usize,
    #[arg(long = "cal-seed", default_value_t = 42)]
    pub cal_seed: u64,
    /// Comparison CSV, one row per cell and metric.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Monitor(a) => commands::monitor(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Replicate(a) => commands::replicate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
