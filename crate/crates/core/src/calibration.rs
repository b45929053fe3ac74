//! Implied volatility under both pricing models and row-wise smile flattening.
//!
//! The root finder keeps a sign-changing bracket at all times. Each step is an Illinois-weighted
//! false-position step, replaced by bisection every third iteration or whenever it would leave the
//! bracket, so convergence is guaranteed even where the price is flat in `sigma`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::bs_price;
use crate::error::{Error, Result};
use crate::market::{MarketContext, Quote, QuoteKind, QuoteTable};
use crate::params::{invalid, DerivedParams, ModelParams, OptionSpec};
use crate::quadrature::QuadratureConfig;
use crate::relativistic::{rel_price, PricingConfig};

pub const DEFAULT_TOL_SIGMA: f64 = 1e-6;
pub const SIGMA_MIN: f64 = 1e-4;
pub const SIGMA_MAX: f64 = 5.0;
/// Upper relativistic bracket as a fraction of the feasibility limit.
const FEASIBILITY_MARGIN: f64 = 0.999;
const MAX_ITERATIONS: usize = 200;
/// Geometric scan used to locate the increasing branch of the relativistic price.
const BRANCH_SCAN_POINTS: usize = 33;
const BRANCH_REFINE_STEPS: usize = 40;
/// Boundary and integral terms beyond this multiple of spot cancel too much to trust.
const CANCELLATION_LIMIT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    Classical,
    Relativistic { c: f64 },
}

/// Quadrature tolerances used for inner pricing during inversion, spot-relative.
pub fn inversion_quadrature() -> QuadratureConfig {
    QuadratureConfig::default().with_abs_tol(1e-10).with_rel_tol(1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IVQuery {
    pub model: Model,
    pub target_price: f64,
    pub option: OptionSpec,
    /// `sigma` is ignored.
    pub params: ModelParams,
    pub tol_sigma: f64,
    pub quad: QuadratureConfig,
}

impl IVQuery {
    pub fn new(model: Model, target_price: f64, option: OptionSpec, params: ModelParams) -> Self {
        Self {
            model,
            target_price,
            option,
            params,
            tol_sigma: DEFAULT_TOL_SIGMA,
            quad: inversion_quadrature(),
        }
    }

    pub fn with_tol_sigma(mut self, tol: f64) -> Self {
        self.tol_sigma = tol;
        self
    }

    pub fn with_quad(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    /// Price differences below this are treated as quadrature noise.
    fn noise_floor(&self) -> f64 {
        1e-9 * self.params.spot
    }

    fn price_at(&self, sigma: f64) -> Result<f64> {
        let p = self.params.with_sigma(sigma);
        match self.model {
            Model::Classical => bs_price(&p, &self.option),
            Model::Relativistic { c } => {
                let cfg = PricingConfig::new(c).with_quad(self.quad);
                let priced = rel_price(&p, &self.option, &cfg)?;
                let scale = priced.boundary_term.abs().max(priced.integral_term.abs());
                if !(scale <= CANCELLATION_LIMIT * p.spot) {
                    return Err(Error::OutOfRange(format!(
                        "relativistic price at sigma = {sigma} (terms of size {scale:e} cancel)"
                    )));
                }
                Ok(priced.value)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IVSolution {
    pub sigma: f64,
    /// Model price at `sigma`.
    pub price: f64,
    pub iterations: usize,
    /// Search bracket actually used, after feasibility and branch screening.
    pub bracket: [f64; 2],
    /// Model prices at the bracket ends.
    pub band: [f64; 2],
}

/// Default search bracket; for the relativistic model `c > sigma^2/2 + |r|` holds throughout.
pub fn sigma_bracket(model: Model, r: f64) -> Result<(f64, f64)> {
    match model {
        Model::Classical => Ok((SIGMA_MIN, SIGMA_MAX)),
        Model::Relativistic { c } => {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("c", c, "must be finite and positive"));
            }
            let room = 2.0 * (c - r.abs());
            let hi = if room > 0.0 {
                SIGMA_MAX.min(FEASIBILITY_MARGIN * room.sqrt())
            } else {
                0.0
            };
            if !(hi > SIGMA_MIN) {
                let c0 = 0.5 * SIGMA_MIN * SIGMA_MIN + r;
                return Err(Error::Infeasible {
                    c,
                    c0,
                    bound: c0.max(0.5 * SIGMA_MIN * SIGMA_MIN + r.abs()),
                });
            }
            Ok((SIGMA_MIN, hi))
        }
    }
}

pub fn implied_vol(q: &IVQuery) -> Result<IVSolution> {
    q.params.with_sigma(1.0).validate()?;
    q.option.validate()?;
    if !(q.tol_sigma.is_finite() && q.tol_sigma > 0.0) {
        return Err(invalid("tol_sigma", q.tol_sigma, "must be finite and positive"));
    }
    if !q.target_price.is_finite() {
        return Err(invalid("target_price", q.target_price, "must be finite"));
    }
    if let Model::Relativistic { c } = q.model {
        // feasibility at the bracket floor, reported with the model's own message
        DerivedParams::new(&q.params.with_sigma(SIGMA_MIN), c)?;
    }
    let (lo0, hi) = sigma_bracket(q.model, q.params.r)?;

    let (lo, price_lo, price_hi) = match q.model {
        Model::Classical => (lo0, q.price_at(lo0)?, q.price_at(hi)?),
        Model::Relativistic { .. } => increasing_branch(q, lo0, hi)?,
    };
    if price_lo > price_hi {
        return Err(Error::NonMonotonic {
            sigma_low: lo,
            sigma_high: hi,
        });
    }
    let band = [price_lo, price_hi];
    let no_solution = || Error::NoSolution {
        target: q.target_price,
        low: price_lo,
        high: price_hi,
        sigma_low: lo,
        sigma_high: hi,
    };
    if q.target_price < price_lo || q.target_price > price_hi {
        return Err(no_solution());
    }
    let solution = |sigma, price, iterations| IVSolution {
        sigma,
        price,
        iterations,
        bracket: [lo, hi],
        band,
    };
    if q.target_price == price_lo {
        return Ok(solution(lo, price_lo, 0));
    }
    if q.target_price == price_hi {
        return Ok(solution(hi, price_hi, 0));
    }

    let noise = q.noise_floor();
    let (mut a, mut b) = (lo, hi);
    let (mut pa, mut pb) = (price_lo, price_hi);
    let (mut fa, mut fb) = (pa - q.target_price, pb - q.target_price);
    let mut last_side = 0i8;
    let mut iterations = 0;
    while b - a >= q.tol_sigma && iterations < MAX_ITERATIONS {
        iterations += 1;
        let secant = (a * fb - b * fa) / (fb - fa);
        let x = if iterations % 3 == 0 || !(secant > a && secant < b) {
            0.5 * (a + b)
        } else {
            secant
        };
        let px = q.price_at(x)?;
        if px < pa - noise || px > pb + noise {
            return Err(Error::NonMonotonic {
                sigma_low: a,
                sigma_high: b,
            });
        }
        let fx = px - q.target_price;
        if fx == 0.0 {
            return Ok(solution(x, px, iterations));
        }
        if fx < 0.0 {
            (a, pa, fa) = (x, px, fx);
            if last_side == -1 {
                fb *= 0.5;
            }
            last_side = -1;
        } else {
            (b, pb, fb) = (x, px, fx);
            if last_side == 1 {
                fa *= 0.5;
            }
            last_side = 1;
        }
    }
    let (sigma, price) = if (pa - q.target_price).abs() <= (pb - q.target_price).abs() {
        (a, pa)
    } else {
        (b, pb)
    };
    Ok(solution(sigma, price, iterations))
}

/// Lower end of the branch on which the relativistic price increases up to `hi`.
///
/// At fixed `c` the price blows up as `sigma -> 0`, so it has an interior minimum. A geometric scan
/// locates it, a golden-section search refines it, and every scanned point above it must increase
/// up to the noise floor.
/// Points whose price cannot be trusted are skipped; they only occur at the small-`sigma` end.
fn increasing_branch(q: &IVQuery, lo: f64, hi: f64) -> Result<(f64, f64, f64)> {
    let try_price = |sigma: f64| match q.price_at(sigma) {
        Ok(p) => Ok(Some(p)),
        Err(Error::Quadrature(_) | Error::OutOfRange(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let ratio = (hi / lo).powf(1.0 / (BRANCH_SCAN_POINTS - 1) as f64);
    let sigmas: Vec<f64> = (0..BRANCH_SCAN_POINTS)
        .map(|i| if i + 1 == BRANCH_SCAN_POINTS { hi } else { lo * ratio.powi(i as i32) })
        .collect();
    let prices = sigmas.iter().map(|&s| try_price(s)).collect::<Result<Vec<_>>>()?;
    let price_hi = match prices[BRANCH_SCAN_POINTS - 1] {
        Some(p) => p,
        None => q.price_at(hi)?,
    };
    let (j, _) = prices
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (i, p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("upper bracket end is evaluable");
    for i in j..BRANCH_SCAN_POINTS - 1 {
        match (prices[i], prices[i + 1]) {
            (Some(a), Some(b)) if b > a - q.noise_floor() => {}
            _ => {
                return Err(Error::NonMonotonic {
                    sigma_low: sigmas[i],
                    sigma_high: sigmas[i + 1],
                })
            }
        }
    }
    if j == 0 {
        return Ok((lo, prices[0].expect("minimum is evaluable"), price_hi));
    }

    // golden section on log sigma; unevaluable points count as +inf
    let objective = |x: f64| -> Result<f64> { Ok(try_price(x.exp())?.unwrap_or(f64::INFINITY)) };
    let (mut a, mut b) = (sigmas[j - 1].ln(), sigmas[j + 1].ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (objective(x1)?, objective(x2)?);
    for _ in 0..BRANCH_REFINE_STEPS {
        if f1 <= f2 {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - g * (b - a);
            f1 = objective(x1)?;
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + g * (b - a);
            f2 = objective(x2)?;
        }
    }
    let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let best = prices[j].expect("minimum is evaluable");
    if f <= best {
        Ok((x.exp(), f, price_hi))
    } else {
        Ok((sigmas[j], best, price_hi))
    }
}

/// One row of a flattened smile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlattenedRow {
    pub strike: f64,
    pub maturity: f64,
    pub iv_classical: Option<f64>,
    pub target_price: Option<f64>,
    pub iv_relativistic: Option<f64>,
    /// Why the row was excluded, if it was.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    /// Rows with both vols available.
    pub count: usize,
    pub std_classical: f64,
    pub std_relativistic: f64,
    /// `std_relativistic / std_classical`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlattenReport {
    pub c: f64,
    pub rows: Vec<FlattenedRow>,
    pub dispersion: Dispersion,
}

/// Reprices every quote classically and inverts it under the relativistic model at `c`.
///
/// Rows are independent; the output order matches `rows`.
pub fn flatten_smile(rows: &[Quote], kind: QuoteKind, market: MarketContext, c: f64, tol_sigma: f64) -> FlattenReport {
    let out: Vec<FlattenedRow> = rows
        .par_iter()
        .map(|row| flatten_row(row, kind, market, c, tol_sigma))
        .collect();
    let dispersion = dispersion(&out);
    FlattenReport {
        c,
        rows: out,
        dispersion,
    }
}

pub fn flatten_table(table: &QuoteTable, c: f64, tol_sigma: f64) -> FlattenReport {
    flatten_smile(table.rows(), table.kind(), table.context(), c, tol_sigma)
}

fn flatten_row(row: &Quote, kind: QuoteKind, market: MarketContext, c: f64, tol_sigma: f64) -> FlattenedRow {
    let mut out = FlattenedRow {
        strike: row.strike,
        maturity: row.maturity,
        iv_classical: None,
        target_price: None,
        iv_relativistic: None,
        flag: None,
    };
    let option = OptionSpec::call(row.strike);
    let base = market.params(1.0, row.maturity);
    let classical = match kind {
        QuoteKind::Iv => bs_price(&base.with_sigma(row.value), &option).map(|price| (row.value, price)),
        QuoteKind::Price => implied_vol(&IVQuery::new(Model::Classical, row.value, option, base).with_tol_sigma(tol_sigma))
            .map(|s| (s.sigma, row.value)),
    };
    let (iv, price) = match classical {
        Ok(v) => v,
        Err(e) => {
            out.flag = Some(format!("classical: {e}"));
            return out;
        }
    };
    out.iv_classical = Some(iv);
    out.target_price = Some(price);
    match implied_vol(&IVQuery::new(Model::Relativistic { c }, price, option, base).with_tol_sigma(tol_sigma)) {
        Ok(s) => out.iv_relativistic = Some(s.sigma),
        Err(e) => out.flag = Some(format!("relativistic: {e}")),
    }
    out
}

fn dispersion(rows: &[FlattenedRow]) -> Dispersion {
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.iv_classical?, r.iv_relativistic?)))
        .collect();
    let classical: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let relativistic: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let std_classical = sample_std(&classical);
    let std_relativistic = sample_std(&relativistic);
    Dispersion {
        count: pairs.len(),
        std_classical,
        std_relativistic,
        ratio: std_relativistic / std_classical,
    }
}

/// Sample standard deviation with the `n - 1` denominator; NaN below two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
