use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "relbs", version, about = "Relativistic Black-Scholes pricing, implied vols and densities")]
pub struct Cli {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Output path, or `-` for standard output. Files are replaced atomically.
    #[arg(long, default_value = "-", global = true)]
    pub out: String,
    /// Omit the generation timestamp so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(alias = "classical")]
    Bs,
    #[value(alias = "relativistic")]
    Rel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Call,
    Put,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one European option.
    #[command(allow_negative_numbers = true)]
    Price(PriceArgs),
    /// Invert an observed price to an implied volatility.
    #[command(allow_negative_numbers = true)]
    Iv(IvArgs),
    /// Flatten a quoted smile under the relativistic model.
    #[command(allow_negative_numbers = true)]
    Smile(SmileArgs),
    /// Compare market-implied, relativistic and lognormal densities.
    #[command(allow_negative_numbers = true)]
    Density(DensityArgs),
    /// Price and density gaps to Black-Scholes along a grid of speeds.
    #[command(allow_negative_numbers = true)]
    Converge(ConvergeArgs),
    /// Check the contour-integral representation of the normal CDF.
    #[command(allow_negative_numbers = true)]
    VerifyLemma(ContourArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MarketArgs {
    /// Risk-free rate per year.
    #[arg(long)]
    pub r: f64,
    /// Spot price.
    #[arg(long = "S", alias = "spot")]
    pub spot: f64,
    /// Maturity in years.
    #[arg(long = "T", alias = "maturity")]
    pub maturity: f64,
    /// Strike.
    #[arg(long = "K", alias = "strike")]
    pub strike: f64,
    /// Continuous dividend yield per year.
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Call)]
    pub kind: KindArg,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub sigma: f64,
    /// Speed limit, required for the relativistic model.
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub market: MarketArgs,
}

#[derive(Debug, Args)]
pub struct IvArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Observed option price.
    #[arg(long)]
    pub price: f64,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = relbs::calibration::DEFAULT_TOL_SIGMA)]
    pub tol_sigma: f64,
    #[command(flatten)]
    pub market: MarketArgs,
}

#[derive(Debug, Args)]
pub struct SmileArgs {
    /// Quote table in the `strike,maturity,quote,quote_kind` schema.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    pub c: f64,
    #[arg(long, default_value_t = relbs::calibration::DEFAULT_TOL_SIGMA)]
    pub tol_sigma: f64,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Maturity to analyse; defaults to the first one in the table.
    #[arg(long)]
    pub maturity: Option<f64>,
    #[arg(long)]
    pub c: f64,
    /// Number of grid strikes, spread evenly inside the stencil margin.
    #[arg(long, default_value_t = 201, value_parser = clap::value_parser!(u32).range(2..=100_000))]
    pub points: u32,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long = "S", alias = "spot")]
    pub spot: f64,
    #[arg(long = "T", alias = "maturity")]
    pub maturity: f64,
    #[arg(long = "K", alias = "strike")]
    pub strike: f64,
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    /// Ascending speeds, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 100.0, 1000.0, 10000.0])]
    pub c_grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub tau: f64,
    /// Largest accepted gap to the normal CDF.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
}
