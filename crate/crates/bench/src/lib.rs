//! Shared inputs for the criterion benchmarks in `benches/`.

use relbs::{ModelParams, PricingConfig};

/// `r = 0.1, sigma = 0.5, S = 50, T = 1`.
pub fn desk() -> ModelParams {
    ModelParams::new(0.1, 0.5, 50.0, 1.0)
}

/// Deep in, at and out of the money for [`desk`].
pub const STRIKES: [f64; 3] = [30.0, 50.0, 80.0];

/// Speeds from strongly relativistic to nearly classical.
pub const SPEEDS: [f64; 3] = [0.6, 3.0, 1e4];

pub fn pricing(c: f64) -> PricingConfig {
    PricingConfig::new(c)
}
