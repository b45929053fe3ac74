//! Quote ingestion, smoothing, and market-implied densities.

mod curve;
mod density;
mod quotes;
pub mod spline;

pub use curve::{smooth_curve, Interpolated, MonotonicityFlag, PriceCurve, MIN_SMOOTHING_KNOTS};
pub use density::{
    density_comparison, implied_density, stencil_step, ComparisonInputs, DensityComparison, DensityCurve,
    DensitySource, L1Distances,
};
pub use quotes::{load_quotes, read_quotes, MarketContext, Quote, QuoteKind, QuoteTable, HEADER};
