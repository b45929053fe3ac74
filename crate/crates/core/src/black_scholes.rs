//! Classical Black-Scholes prices and the lognormal terminal density.
//!
//! A positive dividend yield enters only through `S e^{-qT}`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::normal::norm_cdf;
use crate::params::{validate_strike, DerivedParams, ModelParams, OptionKind, OptionSpec};

pub fn bs_d1_d2(p: &ModelParams, strike: f64) -> Result<(f64, f64)> {
    p.validate()?;
    validate_strike(strike)?;
    let vol_sqrt_t = p.sigma * p.maturity.sqrt();
    let log_moneyness = (p.effective_spot() / strike).ln();
    let d1 = (log_moneyness + (p.r + 0.5 * p.sigma * p.sigma) * p.maturity) / vol_sqrt_t;
    Ok((d1, d1 - vol_sqrt_t))
}

pub fn bs_price(p: &ModelParams, option: &OptionSpec) -> Result<f64> {
    option.validate()?;
    let (d1, d2) = bs_d1_d2(p, option.strike)?;
    let spot = p.effective_spot();
    let discounted_strike = option.strike * (-p.r * p.maturity).exp();
    Ok(match option.kind {
        OptionKind::Call => spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2),
        OptionKind::Put => discounted_strike * norm_cdf(-d2) - spot * norm_cdf(-d1),
    })
}

pub fn bs_call(p: &ModelParams, strike: f64) -> Result<f64> {
    bs_price(p, &OptionSpec::call(strike))
}

pub fn bs_put(p: &ModelParams, strike: f64) -> Result<f64> {
    bs_price(p, &OptionSpec::put(strike))
}

/// Lognormal risk-neutral density of the terminal price, evaluated at `strike`.
///
/// `log(K/S)` is normal with mean `-alpha sigma^2 T = (r - sigma^2/2) T` and variance `sigma^2 T`.
pub fn lognormal_density(p: &ModelParams, strike: f64) -> Result<f64> {
    validate_strike(strike)?;
    // c only feeds nu, which the lognormal does not use
    let d = DerivedParams::new(p, 1.0)?;
    let var_t = p.sigma * p.sigma * p.maturity;
    let z = (strike / p.effective_spot()).ln() + d.alpha * var_t;
    Ok((-z * z / (2.0 * var_t)).exp() / (strike * (2.0 * PI * var_t).sqrt()))
}
