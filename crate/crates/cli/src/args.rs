use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epiforecast_core::ingest::Aggregation;
use epiforecast_core::report::RollingTarget;
use epiforecast_core::{Execution, FitOptions, ModelRequest, RollingConfig, RollingMode};

#[derive(Debug, Parser)]
#[command(name = "epiforecast", version, about = "Monthly case-count forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and report coefficients, metrics and residual diagnostics.
    Fit(FitArgs),
    /// Fit one model and forecast past the end of the data.
    Forecast(ForecastArgs),
    /// Rolling-origin evaluation of one model.
    Roll(RollArgs),
    /// Automatic model selection for one or more regions.
    Select(SelectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Fixed,
    ToEnd,
}

impl From<ModeArg> for RollingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fixed => RollingMode::FixedHorizon,
            ModeArg::ToEnd => RollingMode::ToEnd,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregateArg {
    Sum,
    Mean,
}

impl From<AggregateArg> for Aggregation {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Sum => Aggregation::Sum,
            AggregateArg::Mean => Aggregation::Mean,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Wide CSV with a Date column and one column per region (`-` for stdin).
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,

    /// Read long-format rows (timestamp,region,value) and aggregate them to months.
    #[arg(long, value_name = "sum|mean")]
    pub aggregate: Option<AggregateArg>,

    /// Fill missing cells with the previous month's value instead of failing.
    #[arg(long)]
    pub forward_fill: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Smallest training window.
    #[arg(long, default_value_t = 36)]
    pub min_train: usize,

    /// Forecast steps per rolling window.
    #[arg(long, default_value_t = 3)]
    pub horizon: usize,

    #[arg(long, value_enum, default_value = "fixed")]
    pub mode: ModeArg,

    /// Added to counts before taking logs in the log model; 0 rejects zeros.
    #[arg(long, default_value_t = 1.0)]
    pub log_offset: f64,

    /// Largest AR order tried for the error correction.
    #[arg(long)]
    pub ar_max_order: Option<usize>,

    /// Run without the worker pool.
    #[arg(long)]
    pub sequential: bool,
}

impl EvalArgs {
    pub fn config(&self) -> RollingConfig {
        RollingConfig {
            min_train: self.min_train,
            horizon: self.horizon,
            mode: self.mode.into(),
            fit: FitOptions {
                log_offset: self.log_offset,
                ar_max_order: self.ar_max_order,
            },
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the text report here, with `.json`, `.meta.json` and plot CSV
    /// companions next to it.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Print JSON instead of the text report.
    #[arg(long)]
    pub json: bool,
}

fn parse_model(s: &str) -> Result<ModelRequest, String> {
    s.parse().map_err(|e: epiforecast_core::Error| e.to_string())
}

fn parse_target(s: &str) -> Result<RollingTarget, String> {
    s.parse().map_err(|e: epiforecast_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub region: String,

    /// poly-season, log, lag-trend, lag-poly, ar-corrected or ar-corrected:<base>.
    #[arg(long, value_parser = parse_model)]
    pub model: ModelRequest,

    #[command(flatten)]
    pub eval: EvalArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub region: String,

    #[arg(long, value_parser = parse_model)]
    pub model: ModelRequest,

    /// Months to forecast.
    #[arg(long, default_value_t = 12)]
    pub steps: usize,

    #[command(flatten)]
    pub eval: EvalArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RollArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub region: String,

    /// A model name, or `all` for every model plus the selection verdict.
    #[arg(long, value_parser = parse_target)]
    pub model: RollingTarget,

    #[command(flatten)]
    pub eval: EvalArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Region to evaluate; repeatable.
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    pub region: Vec<String>,

    /// Evaluate every region in the file.
    #[arg(long)]
    pub all: bool,

    #[command(flatten)]
    pub eval: EvalArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}
