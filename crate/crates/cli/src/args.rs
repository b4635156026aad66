use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::table::SdChoice;

#[derive(Debug, Parser)]
#[command(
    name = "cpop",
    version,
    about = "Detect changes in slope of a continuous piecewise-linear signal",
    long_about = None
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the optimal segmentation for one penalty.
    Detect(DetectArgs),
    /// Find every optimal segmentation over a penalty range.
    Crops(CropsArgs),
    /// Simulate data from a piecewise-linear mean plus Gaussian noise.
    Simulate(SimulateArgs),
    /// Evaluate a fitted model at new locations.
    Estimate(EstimateArgs),
    /// Estimate the noise variance.
    #[command(subcommand)]
    Variance(VarianceCommand),
}

/// Options shared by `detect` and `crops`.
#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row and columns x, y and optionally sd.
    pub input: PathBuf,

    /// Noise standard deviation: a positive number, or `column` to read the
    /// sd column. Defaults to the sd column when present, else 1.
    #[arg(long, value_name = "SCALAR|column")]
    pub sd: Option<SdChoice>,

    /// Candidate changepoint locations: `data`, `even:N`, or a one-column CSV.
    #[arg(long, default_value = "data", value_name = "data|even:N|PATH")]
    pub grid: String,

    /// Minimum distance between successive changepoints.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub minseglen: f64,

    /// Keep candidate pruning on under a minimum segment length (faster, may
    /// be sub-optimal).
    #[arg(long)]
    pub prune_approx: bool,

    /// Where to write the JSON result document.
    #[arg(long)]
    pub out: PathBuf,

    /// Where to write a CSV with columns x, y, fitted, residual.
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    /// Penalty per changepoint [default: 2 log n].
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,

    /// Re-solve on the data locations within this distance of the detected
    /// changes (coarse-to-fine search).
    #[arg(long, allow_negative_numbers = true)]
    pub refine_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Select {
    None,
    Bic,
    ElbowData,
}

#[derive(Debug, Args)]
pub struct CropsArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    /// Smallest penalty [default: 1.5 log n].
    #[arg(long, allow_negative_numbers = true)]
    pub beta_min: Option<f64>,

    /// Largest penalty [default: 2.5 log n].
    #[arg(long, allow_negative_numbers = true)]
    pub beta_max: Option<f64>,

    /// How to pick a model from the path.
    #[arg(long, value_enum, default_value_t = Select::None)]
    pub select: Select,

    /// With `--select elbow-data`: where to write the (m, Qm) table.
    #[arg(long)]
    pub elbow_out: Option<PathBuf>,

    /// With `--select bic`: also write the selected model as its own
    /// document.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Locations: `even:N` for 1, 2, ..., N, or a CSV with an x column.
    #[arg(long, value_name = "even:N|PATH")]
    pub x: String,

    /// Comma-separated locations where the slope changes.
    #[arg(long, allow_hyphen_values = true, default_value = "")]
    pub changepoints: String,

    /// Comma-separated slope changes, one per changepoint.
    #[arg(long, allow_hyphen_values = true, default_value = "")]
    pub change_slope: String,

    /// Noise standard deviation: a number, or a CSV with one value per
    /// location.
    #[arg(long, default_value = "1", value_name = "SCALAR|PATH")]
    pub sd: String,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV (x, y, mean) [default: standard output].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Result document from `detect` (or `crops --select bic`).
    pub document: PathBuf,

    /// Query locations: a comma-separated list, or a CSV with an x column.
    #[arg(long, allow_hyphen_values = true, value_name = "LIST|PATH")]
    pub at: String,

    /// Output CSV (x, y_hat) [default: standard output].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum VarianceCommand {
    /// Homoscedastic variance from squared second differences of y.
    Ddiff {
        /// CSV with a y column.
        input: PathBuf,
    },
    /// Fit log sigma^2 = a + b x to the residuals of a previous fit and write
    /// the data back with a per-point sd column.
    Loglinear {
        /// The CSV the fit was run on.
        input: PathBuf,
        /// Result document of the fit.
        #[arg(long)]
        fit: PathBuf,
        /// Output CSV (x, y, sd) [default: standard output].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
