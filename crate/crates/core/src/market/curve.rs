use serde::{Deserialize, Serialize};

use crate::black_scholes::bs_call;
use crate::error::{Error, Result};
use crate::market::quotes::{MarketContext, QuoteKind, QuoteTable};
use crate::market::spline::NaturalSpline;

/// Fewest strikes accepted for smoothing.
pub const MIN_SMOOTHING_KNOTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolated {
    /// Spline on implied vol, mapped to prices through Black-Scholes.
    ImpliedVol,
    CallPrice,
}

/// A pair of adjacent knots where the smoothed call price rises with strike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityFlag {
    pub strike_lo: f64,
    pub strike_hi: f64,
    pub price_lo: f64,
    pub price_hi: f64,
}

/// Smoothed call-price curve over the quoted strike range at one maturity.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceCurve {
    spline: NaturalSpline,
    axis: Interpolated,
    context: MarketContext,
    maturity: f64,
}

impl PriceCurve {
    pub fn price(&self, strike: f64) -> Result<f64> {
        let v = self.spline.eval(strike)?;
        match self.axis {
            Interpolated::CallPrice => Ok(v),
            Interpolated::ImpliedVol => {
                if !(v > 0.0) {
                    return Err(Error::InvalidTable(format!(
                        "interpolated implied vol {v} at strike {strike} is not positive"
                    )));
                }
                bs_call(&self.context.params(v, self.maturity), strike)
            }
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.spline.domain()
    }

    pub fn axis(&self) -> Interpolated {
        self.axis
    }

    pub fn context(&self) -> MarketContext {
        self.context
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn knots(&self) -> &[f64] {
        self.spline.knots()
    }

    /// Knot intervals on which the curve is not nonincreasing in strike, checked at knots and midpoints.
    pub fn monotonicity_flags(&self) -> Result<Vec<MonotonicityFlag>> {
        let knots = self.spline.knots();
        let mut flags = Vec::new();
        for w in knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (p0, p1, p2) = (self.price(lo)?, self.price(0.5 * (lo + hi))?, self.price(hi)?);
            let tol = 1e-12 * self.context.spot;
            if p1 > p0 + tol || p2 > p1 + tol {
                flags.push(MonotonicityFlag {
                    strike_lo: lo,
                    strike_hi: hi,
                    price_lo: p0,
                    price_hi: p2,
                });
            }
        }
        Ok(flags)
    }
}

/// Natural cubic spline through the quotes at `maturity`, on the quoted axis.
pub fn smooth_curve(table: &QuoteTable, maturity: f64) -> Result<PriceCurve> {
    let rows = table.slice(maturity);
    if rows.len() < MIN_SMOOTHING_KNOTS {
        return Err(Error::InvalidTable(format!(
            "smoothing needs at least {MIN_SMOOTHING_KNOTS} strikes at maturity {maturity}, found {}",
            rows.len()
        )));
    }
    let x = rows.iter().map(|q| q.strike).collect();
    let y = rows.iter().map(|q| q.value).collect();
    Ok(PriceCurve {
        spline: NaturalSpline::new(x, y)?,
        axis: match table.kind() {
            QuoteKind::Iv => Interpolated::ImpliedVol,
            QuoteKind::Price => Interpolated::CallPrice,
        },
        context: table.context(),
        maturity,
    })
}
