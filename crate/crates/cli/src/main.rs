mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Target-averaged linear shrinkage estimation of covariance matrices.
#[derive(Debug, Parser)]
#[command(name = "tas", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the covariance of a data file.
    Estimate(EstimateArgs),
    /// Build and export the target set of a data file.
    Targets(TargetsArgs),
    /// Model-based simulation study on one scenario.
    Simulate(SimulateArgs),
    /// Data-partition evaluation on a large data file.
    Partition(PartitionArgs),
    /// Error and conditioning of the sample covariance.
    Diagnose(DiagnoseArgs),
    /// Sensitivity of TAS to the alpha-grid spacing.
    Gridstudy(GridStudyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output directory (created if missing).
    #[arg(long, env = "TAS_OUT_DIR", default_value = "tas-out")]
    pub out_dir: PathBuf,
    /// Comma-separated output formats.
    #[arg(long, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<Format>,
    /// Leave the wall-clock duration out of every output, so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl OutputArgs {
    pub fn wants(&self, f: Format) -> bool {
        self.format.contains(&f)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CenterArgs {
    /// Subtract variable means before computing the sample covariance (default).
    #[arg(long, overrides_with = "no_center")]
    center: bool,
    /// Treat the data as having zero population mean.
    #[arg(long)]
    no_center: bool,
}

impl CenterArgs {
    pub fn enabled(&self) -> bool {
        !self.no_center
    }
}

// The resolved setting, not the two raw flags.
impl Serialize for CenterArgs {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_bool(self.enabled())
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    /// Data CSV: one sample per row, one variable per column, header row of names.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub center: CenterArgs,
    /// Spacing d of the alpha grid {d, 2d, ..., 1 - d}.
    #[arg(long, default_value_t = 0.01)]
    pub alpha_step: f64,
    /// Canonical targets to include.
    #[arg(long, value_delimiter = ',', default_value = "T1,T2,T3,T4,T5,T6,T7,T8,T9")]
    pub targets: Vec<String>,
    /// Square CSV matrix used as an extra target (repeatable).
    #[arg(long)]
    pub external_target: Vec<PathBuf>,
    /// Auxiliary data CSV whose shrinkage estimate becomes an extra target (repeatable).
    #[arg(long)]
    pub external_data: Vec<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TargetsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub center: CenterArgs,
    #[arg(long, value_delimiter = ',', default_value = "T1,T2,T3,T4,T5,T6,T7,T8,T9")]
    pub targets: Vec<String>,
    #[arg(long)]
    pub external_target: Vec<PathBuf>,
    #[arg(long)]
    pub external_data: Vec<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Scenario 1-4.
    #[arg(long)]
    pub scenario: String,
    /// Sample size per repetition.
    #[arg(long)]
    pub n: usize,
    /// Dimension.
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    /// Number of repetitions.
    #[arg(long = "M", default_value_t = 100)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha_step: f64,
    /// Concentration of the scenario-4 inverse-Wishart draw.
    #[arg(long, default_value_t = 0.5)]
    pub s4_alpha: f64,
    /// Draw the random truth of scenarios 3 and 4 once instead of per repetition.
    #[arg(long)]
    pub fixed_sigma: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PartitionArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub center: CenterArgs,
    /// Size of the subset the estimators are fitted on.
    #[arg(long)]
    pub n_small: usize,
    #[arg(long = "M", default_value_t = 100)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha_step: f64,
    /// Auxiliary data for an extra "TAS-info" estimator (repeatable).
    #[arg(long)]
    pub external_data: Vec<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiagnoseArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100")]
    pub p_list: Vec<usize>,
    /// Sample sizes as multiples of p.
    #[arg(long, value_delimiter = ',', default_value = "10,2,1,0.5")]
    pub n_ratios: Vec<f64>,
    #[arg(long = "M", default_value_t = 100)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub center: CenterArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridStudyArgs {
    /// Grid spacings to compare.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.01,0.001")]
    pub d: Vec<f64>,
    #[arg(long = "M", default_value_t = 100)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value_t = 25)]
    pub n: usize,
    /// Truth is variance * I.
    #[arg(long, default_value_t = 4.0)]
    pub variance: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => commands::estimate(&a),
        Command::Targets(a) => commands::targets(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Partition(a) => commands::partition(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Gridstudy(a) => commands::gridstudy(&a),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
