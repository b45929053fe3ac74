use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures of the adaptive integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature configuration: {0}")]
    Config(String),
    #[error("integrand is not finite at y = {at}")]
    NonFinite { at: f64 },
    #[error(
        "adaptive refinement stopped after {panels} panels without meeting tolerance \
         (best estimate {best}, error estimate {error_estimate:e}, target {target:e})"
    )]
    RefinementFailed {
        best: Complex64,
        error_estimate: f64,
        target: f64,
        panels: usize,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field} = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "infeasible speed limit: c = {c} must exceed c0 = sigma^2/2 + r = {c0}{}",
        if bound > c0 { format!(" (and sigma^2/2 + |r| = {bound} for r < 0)") } else { String::new() }
    )]
    Infeasible { c: f64, c0: f64, bound: f64 },

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("{0} is outside the floating-point range")]
    OutOfRange(String),

    #[error("no implied volatility: target {target} outside attainable band [{low}, {high}] for sigma in [{sigma_low}, {sigma_high}]")]
    NoSolution {
        target: f64,
        low: f64,
        high: f64,
        sigma_low: f64,
        sigma_high: f64,
    },

    #[error("price is not monotone in sigma inside [{sigma_low}, {sigma_high}]")]
    NonMonotonic { sigma_low: f64, sigma_high: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate quote (maturity {maturity}, strike {strike}) on lines {first_line} and {second_line}")]
    DuplicateQuote {
        maturity: f64,
        strike: f64,
        first_line: usize,
        second_line: usize,
    },

    #[error("{0}")]
    InvalidTable(String),

    #[error("strike {strike} outside the quoted range [{min}, {max}]")]
    OutOfDomain { strike: f64, min: f64, max: f64 },

    #[error("grid point {strike} needs a margin of {margin} inside [{min}, {max}] for the difference stencil")]
    Stencil {
        strike: f64,
        margin: f64,
        min: f64,
        max: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
