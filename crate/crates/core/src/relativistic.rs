//! Relativistic Black-Scholes prices, parity and the density family `g_c`.
//!
//! With `alpha`, `beta`, `nu` from [`DerivedParams`], the call price is
//!
//! ```text
//! C_c = e^{-beta T} ( S e^{(nu - sqrt(nu^2 - c^2 (1-alpha)^2)) T} - K e^{(nu - sqrt(nu^2 - c^2 alpha^2)) T} 1{alpha < 0}
//!                     + S^alpha K^{1-alpha} / (2 pi) * J )
//! J   = int_R (S/K)^{iy} e^{-(sqrt(c^2 y^2 + nu^2) - nu) T} / ((alpha + iy)(alpha + iy - 1)) dy
//! ```
//!
//! and the put swaps the boundary terms for `K e^{...} 1{alpha > 0}`. For `alpha > 1`, which only
//! happens when `r < -sigma^2/2`, the second pole of `J` crosses the real axis as well and the `S`
//! term moves from the call to the put (with a minus sign), keeping parity intact.
//!
//! Tolerances in [`PricingConfig::quad`] are relative to the spot: prices are resolved to
//! `abs_tol * S` and densities to `abs_tol / S`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::{bs_price, lognormal_density};
use crate::error::{Error, Result};
use crate::params::{invalid, validate_strike, DerivedParams, ModelParams, OptionKind, OptionSpec};
use crate::quadrature::{integrate, integrate_real, IntegrandSpec, QuadratureConfig, QuadratureResult};

pub const DEFAULT_ALPHA_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingConfig {
    /// Information speed limit; must exceed `c0 = sigma^2/2 + r`.
    pub c: f64,
    pub quad: QuadratureConfig,
    /// `|alpha|` below this triggers the volatility perturbation.
    pub alpha_guard: f64,
}

impl PricingConfig {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            quad: QuadratureConfig::default(),
            alpha_guard: DEFAULT_ALPHA_GUARD,
        }
    }

    pub fn with_quad(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(invalid("c", self.c, "must be finite and positive"));
        }
        if !(self.alpha_guard > 0.0 && self.alpha_guard <= 1e-3) {
            return Err(invalid("alpha_guard", self.alpha_guard, "must lie in (0, 1e-3]"));
        }
        self.quad.validate()?;
        Ok(())
    }
}

/// Volatility shift applied when `alpha` sits too close to a pole crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPerturbation {
    pub requested: f64,
    pub used: f64,
    pub alpha_before: f64,
    pub alpha_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelPrice {
    pub value: f64,
    /// Closed-form terms outside the integral, already discounted by `e^{-beta T}`.
    pub boundary_term: f64,
    /// `e^{-beta T} S^alpha K^{1-alpha} / (2 pi) * Re J`.
    pub integral_term: f64,
    /// Imaginary part of the scaled integral, zero up to tolerance.
    pub integral_imag: f64,
    pub quad_diag: QuadratureResult,
    /// Absolute price tolerance requested from the quadrature.
    pub price_tolerance: f64,
    pub derived: DerivedParams,
    pub sigma_perturbation: Option<SigmaPerturbation>,
}

/// Validated inputs with the alpha guard applied.
#[derive(Debug, Clone, Copy)]
struct Setup {
    params: ModelParams,
    derived: DerivedParams,
    c: f64,
    spot: f64,
    perturbation: Option<SigmaPerturbation>,
}

impl Setup {
    fn new(p: &ModelParams, cfg: &PricingConfig) -> Result<Self> {
        cfg.validate()?;
        let mut params = *p;
        let mut derived = DerivedParams::new(p, cfg.c)?;
        let mut perturbation = None;

        for crossing in [0.0, 1.0] {
            if (derived.alpha - crossing).abs() < cfg.alpha_guard {
                let used = perturbed_sigma(p.r, p.sigma, crossing, cfg.alpha_guard);
                params.sigma = used;
                let before = derived.alpha;
                derived = DerivedParams::new(&params, cfg.c)?;
                perturbation = Some(SigmaPerturbation {
                    requested: p.sigma,
                    used,
                    alpha_before: before,
                    alpha_after: derived.alpha,
                });
            }
        }

        let bound = derived.speed_bound(params.sigma);
        if cfg.c <= bound {
            return Err(Error::Infeasible {
                c: cfg.c,
                c0: derived.c0,
                bound,
            });
        }
        Ok(Self {
            params,
            derived,
            c: cfg.c,
            spot: params.effective_spot(),
            perturbation,
        })
    }

    fn maturity(&self) -> f64 {
        self.params.maturity
    }

    /// `(nu - sqrt(nu^2 - c^2 (1-alpha)^2)) T - beta T` and the same with `alpha` in place of
    /// `1 - alpha`.
    fn boundary_exponents(&self) -> (f64, f64) {
        let d = &self.derived;
        let t = self.maturity();
        let spot_gap = root_gap(d.nu, self.c * (1.0 - d.alpha));
        let strike_gap = root_gap(d.nu, self.c * d.alpha);
        ((spot_gap - d.beta) * t, (strike_gap - d.beta) * t)
    }

    /// Spot-side and strike-side boundary terms, already discounted.
    fn boundary_legs(&self, strike: f64) -> (f64, f64) {
        let (spot_exp, strike_exp) = self.boundary_exponents();
        (self.spot * spot_exp.exp(), strike * strike_exp.exp())
    }
}

/// `nu - sqrt(nu^2 - k^2)` in the cancellation-free form `k^2 / (nu + sqrt(nu^2 - k^2))`.
fn root_gap(nu: f64, k: f64) -> f64 {
    let radicand = (nu - k.abs()) * (nu + k.abs());
    assert!(
        radicand >= -1e-12 * nu * nu,
        "negative radicand {radicand} for nu = {nu}, k = {k}: feasibility check bypassed"
    );
    k * k / (nu + radicand.max(0.0).sqrt())
}

/// `sqrt(c^2 y^2 + nu^2) - nu` without cancellation.
fn exponent_profile(c: f64, nu: f64, y: f64) -> f64 {
    let cy = c * y;
    cy * cy / ((cy * cy + nu * nu).sqrt() + nu)
}

fn exponent_slope(c: f64, nu: f64, y: f64) -> f64 {
    let cy = c * y;
    c * cy / (cy * cy + nu * nu).sqrt()
}

/// Nearest volatility with `|alpha - crossing| = guard`, on either side.
fn perturbed_sigma(r: f64, sigma: f64, crossing: f64, guard: f64) -> f64 {
    // alpha = 1/2 - r / sigma^2  =>  sigma^2 = r / (1/2 - alpha)
    [crossing - guard, crossing + guard]
        .into_iter()
        .map(|alpha| r / (0.5 - alpha))
        .filter(|var| *var > 0.0)
        .map(f64::sqrt)
        .min_by(|a, b| (a - sigma).abs().total_cmp(&(b - sigma).abs()))
        .unwrap_or(sigma)
}

/// The pricing integrand `J` for one strike, with its envelope and prefactor.
pub struct PricingIntegral<F> {
    pub spec: IntegrandSpec<F>,
    /// `e^{-beta T} S^alpha K^{1-alpha} / (2 pi)`.
    pub prefactor: f64,
    /// Quadrature tolerances in integral units.
    pub quad: QuadratureConfig,
}

pub fn pricing_integral(
    p: &ModelParams,
    strike: f64,
    cfg: &PricingConfig,
) -> Result<PricingIntegral<impl Fn(f64) -> Complex64 + Clone>> {
    validate_strike(strike)?;
    let setup = Setup::new(p, cfg)?;
    pricing_integral_for(&setup, strike, cfg)
}

fn pricing_integral_for(
    setup: &Setup,
    strike: f64,
    cfg: &PricingConfig,
) -> Result<PricingIntegral<impl Fn(f64) -> Complex64 + Clone>> {
    let DerivedParams { alpha, beta, nu, .. } = setup.derived;
    let c = setup.c;
    let t = setup.maturity();
    let omega = (setup.spot / strike).ln();

    let prefactor = strike * (alpha * omega - beta * t).exp() / (2.0 * PI);
    if !prefactor.is_finite() {
        return Err(Error::OutOfRange(format!(
            "integral prefactor e^(-beta T) S^alpha K^(1-alpha) / (2 pi) for alpha = {alpha}, strike = {strike}"
        )));
    }
    let to_integral_units = if prefactor > 0.0 {
        setup.spot / prefactor
    } else {
        f64::MAX
    };
    let quad = cfg.quad.scale_absolute(to_integral_units);

    let evaluate = move |y: f64| {
        let phase = Complex64::from_polar((-exponent_profile(c, nu, y) * t).exp(), omega * y);
        let a = Complex64::new(alpha, y);
        phase / (a * (a - 1.0))
    };
    let envelope = move |y0: f64| {
        let m = (-exponent_profile(c, nu, y0) * t).exp()
            / ((alpha * alpha + y0 * y0) * ((alpha - 1.0).powi(2) + y0 * y0)).sqrt();
        (m, exponent_slope(c, nu, y0) * t)
    };
    let spec = IntegrandSpec::with_tangent_envelope(evaluate, envelope, quad.tail_eps)?
        .oscillation_frequency(omega)
        .pole_distance(alpha.abs().min((1.0 - alpha).abs()))
        .hermitian();
    Ok(PricingIntegral {
        spec,
        prefactor,
        quad,
    })
}

fn price_with(setup: &Setup, option: &OptionSpec, cfg: &PricingConfig) -> Result<RelPrice> {
    option.validate()?;
    let alpha = setup.derived.alpha;
    let (spot_leg, strike_leg) = setup.boundary_legs(option.strike);
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    let boundary_term = match option.kind {
        OptionKind::Call => spot_leg * indicator(alpha < 1.0) - strike_leg * indicator(alpha < 0.0),
        OptionKind::Put => strike_leg * indicator(alpha > 0.0) - spot_leg * indicator(alpha > 1.0),
    };

    let integral = pricing_integral_for(setup, option.strike, cfg)?;
    let quad_diag = if integral.prefactor > 0.0 {
        integrate(&integral.spec, &integral.quad)?
    } else {
        QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            panels_used: 0,
            evaluations: 0,
            truncation_point: 0.0,
            truncation_bound: 0.0,
        }
    };
    let integral_term = integral.prefactor * quad_diag.value.re;
    Ok(RelPrice {
        value: boundary_term + integral_term,
        boundary_term,
        integral_term,
        integral_imag: integral.prefactor * quad_diag.value.im,
        quad_diag,
        price_tolerance: cfg.quad.abs_tol * setup.spot,
        derived: setup.derived,
        sigma_perturbation: setup.perturbation,
    })
}

pub fn rel_price(p: &ModelParams, option: &OptionSpec, cfg: &PricingConfig) -> Result<RelPrice> {
    let setup = Setup::new(p, cfg)?;
    price_with(&setup, option, cfg)
}

pub fn rel_call(p: &ModelParams, strike: f64, cfg: &PricingConfig) -> Result<RelPrice> {
    rel_price(p, &OptionSpec::call(strike), cfg)
}

pub fn rel_put(p: &ModelParams, strike: f64, cfg: &PricingConfig) -> Result<RelPrice> {
    rel_price(p, &OptionSpec::put(strike), cfg)
}

/// Closed-form `C_c - P_c = e^{-beta T} (S e^{...} - K e^{...})`.
pub fn rel_parity_rhs(p: &ModelParams, strike: f64, cfg: &PricingConfig) -> Result<f64> {
    validate_strike(strike)?;
    let setup = Setup::new(p, cfg)?;
    let (spot_leg, strike_leg) = setup.boundary_legs(strike);
    Ok(spot_leg - strike_leg)
}

/// Relativistic risk-neutral density `g_c(K) = e^{rT} d^2 C_c / dK^2`:
///
/// ```text
/// g_c(K) = e^{(r - beta) T} / (2 pi) * S^alpha / K^{1+alpha} * int_R (S/K)^{iy} e^{-(sqrt(c^2 y^2 + nu^2) - nu) T} dy
/// ```
pub fn rel_density(p: &ModelParams, strike: f64, cfg: &PricingConfig) -> Result<f64> {
    validate_strike(strike)?;
    let setup = Setup::new(p, cfg)?;
    density_with(&setup, strike, cfg).map(|(value, _)| value)
}

/// Density together with the quadrature diagnostics.
pub fn rel_density_detailed(
    p: &ModelParams,
    strike: f64,
    cfg: &PricingConfig,
) -> Result<(f64, QuadratureResult)> {
    validate_strike(strike)?;
    let setup = Setup::new(p, cfg)?;
    density_with(&setup, strike, cfg)
}

fn density_with(setup: &Setup, strike: f64, cfg: &PricingConfig) -> Result<(f64, QuadratureResult)> {
    let DerivedParams { alpha, beta, nu, .. } = setup.derived;
    let c = setup.c;
    let t = setup.maturity();
    let r = setup.params.r;
    let omega = (setup.spot / strike).ln();

    let prefactor = ((r - beta) * t + alpha * omega).exp() / (2.0 * PI * strike);
    if !prefactor.is_finite() {
        return Err(Error::OutOfRange(format!(
            "density prefactor for alpha = {alpha}, strike = {strike}"
        )));
    }
    if prefactor == 0.0 {
        return Ok((0.0, QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            panels_used: 0,
            evaluations: 0,
            truncation_point: 0.0,
            truncation_bound: 0.0,
        }));
    }
    let quad = cfg.quad.scale_absolute(1.0 / (setup.spot * prefactor));

    let evaluate = move |y: f64| Complex64::from_polar((-exponent_profile(c, nu, y) * t).exp(), omega * y);
    let envelope = move |y0: f64| {
        (
            (-exponent_profile(c, nu, y0) * t).exp(),
            exponent_slope(c, nu, y0) * t,
        )
    };
    let spec = IntegrandSpec::with_tangent_envelope(evaluate, envelope, quad.tail_eps)?
        .oscillation_frequency(omega)
        .hermitian();
    let res = integrate(&spec, &quad)?;
    Ok((prefactor * res.value.re, res))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub mass: f64,
    pub error_estimate: f64,
    pub k_min: f64,
    pub k_max: f64,
}

/// Total mass of `g_c` over `[k_min, k_max]`, integrated in log-strike.
///
/// The range must cover at least `S e^{+-10 sigma sqrt(T)}`. The mass is reported, not forced
/// to one: for finite `c` it generally differs from one.
pub fn rel_density_mass(p: &ModelParams, cfg: &PricingConfig, k_min: f64, k_max: f64) -> Result<MassEstimate> {
    let setup = Setup::new(p, cfg)?;
    let spread = (10.0 * setup.params.sigma * setup.maturity().sqrt()).exp();
    let spot = setup.spot;
    if !(k_min > 0.0 && k_min <= spot / spread) {
        return Err(invalid("k_min", k_min, "must be positive and at most S e^(-10 sigma sqrt(T))"));
    }
    if !(k_max.is_finite() && k_max >= spot * spread) {
        return Err(invalid("k_max", k_max, "must be finite and at least S e^(10 sigma sqrt(T))"));
    }

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |x: f64| {
        let k = x.exp();
        match density_with(&setup, k, cfg) {
            Ok((g, _)) => g * k,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let outer = QuadratureConfig::default().with_abs_tol(cfg.quad.abs_tol.max(1e-12));
    let res = integrate_real(integrand, k_min.ln(), k_max.ln(), &outer);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let res = res?;
    Ok(MassEstimate {
        mass: res.value.re,
        error_estimate: res.error_estimate,
        k_min,
        k_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub c: f64,
    pub rel_price: f64,
    pub bs_price: f64,
    pub price_gap: f64,
    /// Largest `|g_c - g|` over the density grid.
    pub density_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub strike: f64,
    pub rows: Vec<ConvergenceRow>,
    pub density_grid: Vec<f64>,
    /// Price gaps strictly decrease along the ascending `c` grid.
    pub strictly_decreasing: bool,
    /// `1e-4 S`, the gap allowed at the largest `c`.
    pub threshold: f64,
    pub within_threshold: bool,
}

/// Number of strikes in the density sup-norm grid.
const CONVERGENCE_DENSITY_POINTS: usize = 41;

/// Price and density gaps against the classical model along an ascending grid of speeds.
pub fn convergence_report(
    p: &ModelParams,
    strike: f64,
    c_grid: &[f64],
    quad: &QuadratureConfig,
) -> Result<ConvergenceReport> {
    validate_strike(strike)?;
    if c_grid.is_empty() {
        return Err(Error::InvalidTable("c grid must not be empty".to_string()));
    }
    if c_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidTable("c grid must be strictly ascending".to_string()));
    }
    for &c in c_grid {
        Setup::new(p, &PricingConfig::new(c).with_quad(*quad))?;
    }

    let bs = bs_price(p, &OptionSpec::call(strike))?;
    let width = 3.0 * p.sigma * p.maturity.sqrt();
    let center = p.effective_spot();
    let density_grid: Vec<f64> = (0..CONVERGENCE_DENSITY_POINTS)
        .map(|i| {
            let u = -1.0 + 2.0 * i as f64 / (CONVERGENCE_DENSITY_POINTS - 1) as f64;
            center * (width * u).exp()
        })
        .collect();
    let lognormal: Vec<f64> = density_grid
        .iter()
        .map(|&k| lognormal_density(p, k))
        .collect::<Result<_>>()?;

    let rows = c_grid
        .par_iter()
        .map(|&c| {
            let cfg = PricingConfig::new(c).with_quad(*quad);
            let price = rel_call(p, strike, &cfg)?.value;
            let density_gap = density_grid
                .iter()
                .zip(&lognormal)
                .map(|(&k, &g)| rel_density(p, k, &cfg).map(|gc| (gc - g).abs()))
                .try_fold(0.0f64, |acc, gap| gap.map(|gap| acc.max(gap)))?;
            Ok(ConvergenceRow {
                c,
                rel_price: price,
                bs_price: bs,
                price_gap: (price - bs).abs(),
                density_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let strictly_decreasing = rows.windows(2).all(|w| w[1].price_gap < w[0].price_gap);
    let threshold = 1e-4 * p.spot;
    let within_threshold = rows.last().is_some_and(|r| r.price_gap <= threshold);
    Ok(ConvergenceReport {
        strike,
        rows,
        density_grid,
        strictly_decreasing,
        threshold,
        within_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::black_scholes::{bs_call, bs_put};
    use approx::assert_abs_diff_eq;

    fn desk() -> ModelParams {
        ModelParams::new(0.1, 0.5, 50.0, 1.0)
    }

    fn tight(c: f64) -> PricingConfig {
        PricingConfig::new(c).with_quad(QuadratureConfig::default().with_abs_tol(1e-12).with_rel_tol(1e-12))
    }

    #[test]
    fn reference_prices_at_c3() {
        // independent high-precision evaluation of the same integral representation
        let cfg = tight(3.0);
        for (k, expected) in [(30.0, 23.82711), (50.0, 11.94304), (80.0, 3.95845)] {
            let price = rel_call(&desk(), k, &cfg).unwrap().value;
            assert_abs_diff_eq!(price, expected, epsilon = 1e-5);
        }
    }

    #[test]
    fn large_speed_recovers_black_scholes() {
        let price = rel_call(&desk(), 50.0, &tight(1e4)).unwrap();
        let bs = bs_call(&desk(), 50.0).unwrap();
        assert!((price.value - bs).abs() < 1e-8, "{} vs {bs}", price.value);
        assert!(price.integral_imag.abs() < 1e-12);
    }

    #[test]
    fn speed_at_or_below_c0_is_infeasible() {
        let p = desk();
        for c in [0.225, 0.2, 0.1] {
            match rel_call(&p, 50.0, &PricingConfig::new(c)) {
                Err(Error::Infeasible { c0, .. }) => assert_abs_diff_eq!(c0, 0.225, epsilon = 1e-15),
                other => panic!("expected infeasible, got {other:?}"),
            }
        }
        let negative = ModelParams::new(-0.05, 0.5, 50.0, 1.0);
        assert!(matches!(
            rel_call(&negative, 50.0, &PricingConfig::new(0.15)),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn parity_exact_up_to_rounding() {
        let p = desk().with_dividend_yield(0.02);
        let cfg = PricingConfig::new(2.0);
        for k in [20.0, 45.0, 50.0, 70.0, 150.0] {
            let call = rel_call(&p, k, &cfg).unwrap().value;
            let put = rel_put(&p, k, &cfg).unwrap().value;
            let rhs = rel_parity_rhs(&p, k, &cfg).unwrap();
            assert!((call - put - rhs).abs() <= 1e-10 * p.spot, "K = {k}");
        }
    }

    #[test]
    fn put_vanishes_for_small_strikes() {
        let put = rel_put(&desk(), 1e-3, &PricingConfig::new(3.0)).unwrap();
        assert!(put.value.abs() < 1e-8, "{}", put.value);
    }

    #[test]
    fn strongly_negative_rate_keeps_parity_and_bounds() {
        // alpha > 1 once r < -sigma^2/2
        let p = ModelParams::new(-0.2, 0.4, 100.0, 1.0);
        let cfg = PricingConfig::new(5.0);
        let alpha = DerivedParams::new(&p, 5.0).unwrap().alpha;
        assert!(alpha > 1.0);
        for k in [60.0, 100.0, 160.0] {
            let call = rel_call(&p, k, &cfg).unwrap().value;
            let put = rel_put(&p, k, &cfg).unwrap().value;
            assert!(call > 0.0 && call < p.spot, "K = {k}: {call}");
            assert!(put > 0.0, "K = {k}: {put}");
            let rhs = rel_parity_rhs(&p, k, &cfg).unwrap();
            assert!((call - put - rhs).abs() < 1e-9 * p.spot);
        }
        let far = rel_call(&p, 100.0, &tight(1e4)).unwrap().value;
        assert_abs_diff_eq!(far, bs_call(&p, 100.0).unwrap(), epsilon = 1e-6);
    }

    #[test]
    fn alpha_guard_perturbs_sigma() {
        let p = ModelParams::new(0.02, 0.2, 100.0, 1.0);
        let priced = rel_call(&p, 100.0, &PricingConfig::new(3.0)).unwrap();
        let shift = priced.sigma_perturbation.expect("alpha = 0 must be perturbed");
        assert!(shift.alpha_before.abs() < 1e-15);
        assert_abs_diff_eq!(shift.alpha_after.abs(), DEFAULT_ALPHA_GUARD, epsilon = 1e-12);
        assert!((shift.used - 0.2).abs() < 1e-6);
        assert!(priced.value.is_finite());
        let bs = bs_call(&p, 100.0).unwrap();
        assert!((priced.value - bs).abs() < 0.05);

        let p_put = rel_put(&p, 100.0, &PricingConfig::new(3.0)).unwrap().value;
        assert!(p_put > 0.0);
    }

    #[test]
    fn density_matches_lognormal_for_large_speed() {
        let p = desk();
        let cfg = PricingConfig::new(1e4);
        for k in [20.0, 38.0, 50.0, 90.0, 160.0] {
            let g = rel_density(&p, k, &cfg).unwrap();
            let expected = lognormal_density(&p, k).unwrap();
            assert!((g - expected).abs() < 1e-7, "K = {k}: {g} vs {expected}");
        }
    }

    #[test]
    fn density_is_second_strike_derivative() {
        let p = desk();
        let cfg = tight(3.0);
        let h = 0.1;
        for k in [35.0, 50.0, 70.0] {
            let c = |k: f64| rel_call(&p, k, &cfg).unwrap().value;
            let fd = (c(k + h) - 2.0 * c(k) + c(k - h)) / (h * h) * (p.r * p.maturity).exp();
            let g = rel_density(&p, k, &cfg).unwrap();
            assert!((fd - g).abs() < 1e-5, "K = {k}: {fd} vs {g}");
        }
    }

    #[test]
    fn mass_range_must_cover_ten_sigma() {
        let cfg = PricingConfig::new(3.0);
        assert!(rel_density_mass(&desk(), &cfg, 10.0, 500.0).is_err());
        assert!(rel_density_mass(&desk(), &cfg, 1e-3, 200.0).is_err());
    }

    #[test]
    fn calls_below_black_scholes_at_the_money() {
        let rel = rel_call(&desk(), 50.0, &PricingConfig::new(3.0)).unwrap().value;
        assert!(rel < bs_call(&desk(), 50.0).unwrap());
        let put = rel_put(&desk(), 50.0, &PricingConfig::new(3.0)).unwrap().value;
        assert!(put < bs_put(&desk(), 50.0).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PricingConfig::new(3.0);
        cfg.alpha_guard = 0.01;
        assert!(matches!(rel_call(&desk(), 50.0, &cfg), Err(Error::InvalidParameter { field: "alpha_guard", .. })));
        assert!(rel_call(&desk(), 50.0, &PricingConfig::new(f64::NAN)).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn prices_respect_no_arbitrage_bounds(
            r in -0.03f64..0.15, sigma in 0.1f64..0.8, t in 0.1f64..3.0,
            moneyness in 0.5f64..2.0, speed in 1.5f64..20.0,
        ) {
            let p = ModelParams::new(r, sigma, 100.0, t);
            let cfg = PricingConfig::new(speed);
            let k = 100.0 * moneyness;
            let call = rel_call(&p, k, &cfg).unwrap();
            let put = rel_put(&p, k, &cfg).unwrap();
            // Deep out-of-the-money values may dip below zero, but only within the certified tolerance.
            proptest::prop_assert!(call.value > -call.price_tolerance && call.value < 100.0);
            proptest::prop_assert!(put.value > -put.price_tolerance);
            let (call, put) = (call.value, put.value);
            let rhs = rel_parity_rhs(&p, k, &cfg).unwrap();
            proptest::prop_assert!((call - put - rhs).abs() <= 1e-10 * 100.0);
        }
    }
}
