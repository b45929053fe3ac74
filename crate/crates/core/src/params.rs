//! Market inputs and the derived model constants shared by both pricing models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest volatility and maturity accepted; degenerate limits are rejected, not special-cased.
pub const MIN_SIGMA: f64 = 1e-8;
pub const MIN_MATURITY: f64 = 1e-8;

/// Market-level inputs of a European option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Continuously compounded risk-free rate per year.
    pub r: f64,
    /// Volatility per square-root year.
    pub sigma: f64,
    /// Spot price.
    pub spot: f64,
    /// Time to maturity in years.
    pub maturity: f64,
    /// Continuous dividend yield per year.
    #[serde(default)]
    pub dividend_yield: f64,
}

impl ModelParams {
    pub fn new(r: f64, sigma: f64, spot: f64, maturity: f64) -> Self {
        Self {
            r,
            sigma,
            spot,
            maturity,
            dividend_yield: 0.0,
        }
    }

    pub fn with_dividend_yield(mut self, q: f64) -> Self {
        self.dividend_yield = q;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() {
            return Err(invalid("r", self.r, "must be finite"));
        }
        if !(self.sigma.is_finite() && self.sigma >= MIN_SIGMA) {
            return Err(invalid("sigma", self.sigma, "must be finite and at least 1e-8"));
        }
        if !(self.spot.is_finite() && self.spot > 0.0) {
            return Err(invalid("spot", self.spot, "must be finite and positive"));
        }
        if !(self.maturity.is_finite() && self.maturity >= MIN_MATURITY) {
            return Err(invalid("maturity", self.maturity, "must be finite and at least 1e-8 years"));
        }
        if !(self.dividend_yield.is_finite() && self.dividend_yield >= 0.0) {
            return Err(invalid("dividend_yield", self.dividend_yield, "must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Spot discounted by the dividend yield, `S e^{-qT}`. Every formula uses this in place of `S`.
    pub fn effective_spot(&self) -> f64 {
        self.spot * (-self.dividend_yield * self.maturity).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
}

impl OptionSpec {
    pub fn call(strike: f64) -> Self {
        Self {
            kind: OptionKind::Call,
            strike,
        }
    }

    pub fn put(strike: f64) -> Self {
        Self {
            kind: OptionKind::Put,
            strike,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_strike(self.strike)
    }
}

pub(crate) fn validate_strike(strike: f64) -> Result<()> {
    if strike.is_finite() && strike > 0.0 {
        Ok(())
    } else {
        Err(invalid("strike", strike, "must be finite and positive"))
    }
}

pub(crate) fn invalid(field: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter { field, value, reason }
}

/// The constants `alpha`, `beta`, `nu` and the speed bound `c0` of the relativistic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub c0: f64,
}

impl DerivedParams {
    pub fn new(p: &ModelParams, c: f64) -> Result<Self> {
        p.validate()?;
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid("c", c, "must be finite and positive"));
        }
        let var = p.sigma * p.sigma;
        let half_var = 0.5 * var;
        Ok(Self {
            alpha: (half_var - p.r) / var,
            beta: (half_var + p.r).powi(2) / (2.0 * var),
            nu: c * c / var,
            c0: half_var + p.r,
        })
    }

    /// Lower bound on `c` keeping both boundary-term radicands real.
    ///
    /// Equals `c0` for `r >= 0`; a negative rate pushes `|alpha| sigma^2 = sigma^2/2 - r`
    /// above `c0`, and that becomes the binding constraint.
    pub fn speed_bound(&self, sigma: f64) -> f64 {
        let var = sigma * sigma;
        self.c0.max(var * self.alpha.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derived_params_reference_values() {
        let d = DerivedParams::new(&ModelParams::new(0.1, 0.5, 50.0, 1.0), 3.0).unwrap();
        assert_abs_diff_eq!(d.alpha, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(d.beta, 0.10125, epsilon = 1e-15);
        assert_abs_diff_eq!(d.nu, 36.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.c0, 0.225, epsilon = 1e-15);

        let d = DerivedParams::new(&ModelParams::new(0.0, 1.0, 1.0, 1.0), 2.0).unwrap();
        assert_eq!((d.alpha, d.beta, d.nu, d.c0), (0.5, 0.125, 4.0, 0.5));
    }

    #[test]
    fn alpha_vanishes_when_rate_is_half_variance() {
        for sigma in [0.1, 0.37, 1.3] {
            let p = ModelParams::new(sigma * sigma / 2.0, sigma, 10.0, 1.0);
            assert_eq!(DerivedParams::new(&p, 7.0).unwrap().alpha, 0.0);
        }
    }

    #[test]
    fn speed_bound_covers_negative_rates() {
        let p = ModelParams::new(-0.05, 0.5, 1.0, 1.0);
        let d = DerivedParams::new(&p, 1.0).unwrap();
        assert_abs_diff_eq!(d.c0, 0.075, epsilon = 1e-15);
        assert_abs_diff_eq!(d.speed_bound(p.sigma), 0.175, epsilon = 1e-15);
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            (ModelParams::new(0.1, 0.0, 50.0, 1.0), "sigma"),
            (ModelParams::new(0.1, 0.5, -1.0, 1.0), "spot"),
            (ModelParams::new(0.1, 0.5, 50.0, 1e-9), "maturity"),
            (ModelParams::new(f64::NAN, 0.5, 50.0, 1.0), "r"),
            (ModelParams::new(0.1, 0.5, 50.0, 1.0).with_dividend_yield(-0.01), "dividend_yield"),
        ];
        for (p, expected) in cases {
            match p.validate() {
                Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, expected),
                other => panic!("expected invalid {expected}, got {other:?}"),
            }
        }
        assert!(DerivedParams::new(&ModelParams::new(0.1, 0.5, 50.0, 1.0), 0.0).is_err());
        assert!(OptionSpec::call(0.0).validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn alpha_matches_rearranged_definition(r in -0.5f64..0.5, sigma in 0.01f64..2.0, c in 0.1f64..100.0) {
            let p = ModelParams::new(r, sigma, 1.0, 1.0);
            let d = DerivedParams::new(&p, c).unwrap();
            let rearranged = 0.5 - r / (sigma * sigma);
            proptest::prop_assert!((d.alpha - rearranged).abs() <= 1e-12 * rearranged.abs().max(1.0));
            proptest::prop_assert!(d.alpha <= 0.5 || r < 0.0);
            proptest::prop_assert!(d.beta >= 0.0 && d.nu > 0.0);
            let again = DerivedParams::new(&p, c).unwrap();
            proptest::prop_assert_eq!(d, again);
        }
    }
}
