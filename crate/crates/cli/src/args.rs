use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nfda", version, about = "Functional nonparametric river-flow prediction and flood quantiles")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptive statistics and autocorrelations of a series.
    Describe(DescribeArgs),
    /// Predict the final year of a monthly series from the years before it.
    Predict(PredictArgs),
    /// Compare GEV, kernel and functional flow quantiles on daily data.
    Extremes(ExtremesArgs),
    /// Run the built-in oracle suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Rdb,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionalScale {
    Log,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    L2,
    Fpca,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input file (NWIS RDB or CSV).
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Rdb)]
    pub format: Format,

    /// Name of the value column.
    #[arg(long)]
    pub column: String,

    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    /// Convert values from ft³/s to m³/s on ingestion.
    #[arg(long)]
    pub cfs_to_cms: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FunctionalArgs {
    #[arg(long, value_enum, default_value_t = Metric::Fpca)]
    pub metric: Metric,

    /// FPCA component count (default: smallest q explaining 90% of variance).
    #[arg(long)]
    pub q: Option<usize>,

    /// Curve-space bandwidth override.
    #[arg(long)]
    pub h: Option<f64>,

    /// Response-space bandwidth override.
    #[arg(long)]
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Largest autocorrelation lag.
    #[arg(long, default_value_t = 36)]
    pub max_lag: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub functional: FunctionalArgs,

    /// Comma-separated subset of: median, regression, ar.
    #[arg(long, value_delimiter = ',', default_value = "median,regression,ar")]
    pub methods: Vec<String>,

    /// AR order for the baseline; 0 selects it by AIC.
    #[arg(long, default_value_t = 0)]
    pub ar_order: usize,

    /// Leave the (penultimate, last known) pair out of the final prediction.
    #[arg(long)]
    pub exclude_latest_pair: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExtremesArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub functional: FunctionalArgs,

    /// Comma-separated subset of: gev, kernel, nfda.
    #[arg(long, value_delimiter = ',', default_value = "gev,kernel,nfda")]
    pub methods: Vec<String>,

    /// Number of flow levels between the median and the 0.95 quantile.
    #[arg(long, default_value_t = 20)]
    pub levels: usize,

    /// Scalar kernel bandwidth override (cross-validated otherwise).
    #[arg(long)]
    pub kernel_h: Option<f64>,

    /// Scale of the daily curves used by the functional quantiles.
    #[arg(long, value_enum, default_value_t = FunctionalScale::Log)]
    pub functional_scale: FunctionalScale,

    /// Exit with status 5 when the GEV fit does not converge.
    #[arg(long)]
    pub strict: bool,

    #[arg(long, hide = true, default_value_t = nfda_core::evt::MLE_MAX_ITERATIONS)]
    pub gev_max_iterations: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Seed for the simulated samples.
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,

    /// Test hook: corrupt the named suite so that it fails.
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}
