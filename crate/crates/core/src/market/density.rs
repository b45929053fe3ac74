use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::{bs_call, lognormal_density};
use crate::calibration::{implied_vol, IVQuery, Model};
use crate::error::{Error, Result};
use crate::market::curve::{smooth_curve, Interpolated, MonotonicityFlag, PriceCurve};
use crate::market::quotes::{QuoteKind, QuoteTable};
use crate::params::OptionSpec;
use crate::relativistic::{rel_density, PricingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySource {
    Relativistic { c: f64 },
    Lognormal,
    MarketImplied,
}

impl DensitySource {
    pub fn label(&self) -> String {
        match self {
            DensitySource::Relativistic { c } => format!("relativistic(c={c})"),
            DensitySource::Lognormal => "lognormal".to_string(),
            DensitySource::MarketImplied => "market-implied".to_string(),
        }
    }
}

/// Density values on a strictly ascending strike grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub source: DensitySource,
}

impl DensityCurve {
    /// Points more negative than `-1e-6 * max value`.
    pub fn negative_points(&self) -> Vec<f64> {
        let floor = -1e-6 * self.values.iter().fold(0.0f64, |m, v| m.max(*v));
        self.grid
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| **v < floor)
            .map(|(k, _)| *k)
            .collect()
    }

    /// Trapezoid estimate of `int |self - other| dK` on the shared grid.
    pub fn l1_distance(&self, other: &DensityCurve) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidTable("density curves are on different grids".to_string()));
        }
        let gap: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).collect();
        Ok(self
            .grid
            .windows(2)
            .zip(gap.windows(2))
            .map(|(k, g)| 0.5 * (k[1] - k[0]) * (g[0] + g[1]))
            .sum())
    }
}

/// Sorted copy of `grid`, rejecting non-finite and repeated strikes.
fn ascending(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidTable("density grid is empty".to_string()));
    }
    if let Some(k) = grid.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Error::InvalidTable(format!("density grid point {k} is not a positive strike")));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidTable(format!("density grid repeats strike {}", w[0])));
    }
    Ok(sorted)
}

/// Difference step for a curve: `max(1e-4 S, (K_max - K_min) / 2000)`.
pub fn stencil_step(curve: &PriceCurve) -> f64 {
    let (min, max) = curve.domain();
    (1e-4 * curve.context().spot).max((max - min) / 2000.0)
}

/// `e^{rT} (C(K+h) - 2 C(K) + C(K-h)) / h^2` at every grid point, each at least `2h` inside the curve's domain.
pub fn implied_density(curve: &PriceCurve, r: f64, maturity: f64, grid: &[f64]) -> Result<DensityCurve> {
    let grid = ascending(grid)?;
    let h = stencil_step(curve);
    let (min, max) = curve.domain();
    let margin = 2.0 * h;
    if let Some(&k) = grid.iter().find(|&&k| k < min + margin || k > max - margin) {
        return Err(Error::Stencil {
            strike: k,
            margin,
            min,
            max,
        });
    }
    let growth = (r * maturity).exp();
    let values = grid
        .par_iter()
        .map(|&k| {
            let second = curve.price(k + h)? - 2.0 * curve.price(k)? + curve.price(k - h)?;
            Ok(growth * second / (h * h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityCurve {
        grid,
        values,
        source: DensitySource::MarketImplied,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonInputs {
    pub spot: f64,
    pub rate: f64,
    pub yield_q: f64,
    pub maturity: f64,
    /// Quoted strike nearest to spot.
    pub atm_strike: f64,
    /// Classical implied vol at the money, used for the lognormal curve.
    pub sigma_lognormal: f64,
    /// Relativistic implied vol at the money, used for the relativistic curve.
    pub sigma_relativistic: f64,
    pub interpolant: Interpolated,
    pub stencil_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Distances {
    pub relativistic: f64,
    pub lognormal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityComparison {
    pub inputs: ComparisonInputs,
    pub c: f64,
    pub market_implied: DensityCurve,
    pub relativistic: DensityCurve,
    pub lognormal: DensityCurve,
    pub l1_distances: L1Distances,
    pub monotonicity_flags: Vec<MonotonicityFlag>,
    /// Human-readable diagnostics; empty when nothing was noticed.
    pub flags: Vec<String>,
}

/// Market-implied, relativistic and lognormal densities on one grid, with L1 distances to the
/// market curve.
pub fn density_comparison(table: &QuoteTable, maturity: f64, c: f64, grid: &[f64]) -> Result<DensityComparison> {
    let curve = smooth_curve(table, maturity)?;
    let ctx = table.context();
    let market_implied = implied_density(&curve, ctx.rate, maturity, grid)?;
    let grid = market_implied.grid.clone();

    let rows = table.slice(maturity);
    let atm = rows
        .iter()
        .min_by(|a, b| (a.strike - ctx.spot).abs().total_cmp(&(b.strike - ctx.spot).abs()))
        .copied()
        .ok_or_else(|| Error::InvalidTable(format!("no quotes at maturity {maturity}")))?;
    let option = OptionSpec::call(atm.strike);
    let base = ctx.params(1.0, maturity);
    let (sigma_lognormal, atm_price) = match table.kind() {
        QuoteKind::Iv => (atm.value, bs_call(&base.with_sigma(atm.value), atm.strike)?),
        QuoteKind::Price => (implied_vol(&IVQuery::new(Model::Classical, atm.value, option, base))?.sigma, atm.value),
    };
    let sigma_relativistic = implied_vol(&IVQuery::new(Model::Relativistic { c }, atm_price, option, base))?.sigma;

    let rel_params = base.with_sigma(sigma_relativistic);
    let cfg = PricingConfig::new(c);
    let relativistic = DensityCurve {
        values: grid
            .par_iter()
            .map(|&k| rel_density(&rel_params, k, &cfg))
            .collect::<Result<_>>()?,
        grid: grid.clone(),
        source: DensitySource::Relativistic { c },
    };
    let ln_params = base.with_sigma(sigma_lognormal);
    let lognormal = DensityCurve {
        values: grid.iter().map(|&k| lognormal_density(&ln_params, k)).collect::<Result<_>>()?,
        grid,
        source: DensitySource::Lognormal,
    };

    let l1_distances = L1Distances {
        relativistic: relativistic.l1_distance(&market_implied)?,
        lognormal: lognormal.l1_distance(&market_implied)?,
    };
    let monotonicity_flags = curve.monotonicity_flags()?;
    let mut flags = Vec::new();
    for (curve, name) in [(&market_implied, "market-implied"), (&relativistic, "relativistic")] {
        let negative = curve.negative_points();
        if !negative.is_empty() {
            flags.push(format!("{name} density negative at {} grid points, first at K = {}", negative.len(), negative[0]));
        }
    }
    if !monotonicity_flags.is_empty() {
        flags.push(format!("smoothed call price increases with strike on {} knot intervals", monotonicity_flags.len()));
    }

    Ok(DensityComparison {
        inputs: ComparisonInputs {
            spot: ctx.spot,
            rate: ctx.rate,
            yield_q: ctx.yield_q,
            maturity,
            atm_strike: atm.strike,
            sigma_lognormal,
            sigma_relativistic,
            interpolant: curve.axis(),
            stencil_step: stencil_step(&curve),
        },
        c,
        market_implied,
        relativistic,
        lognormal,
        l1_distances,
        monotonicity_flags,
        flags,
    })
}
