use num_complex::Complex64;
use relbs::quadrature::{integrate_real, QuadratureConfig};
use relbs::relativistic::{rel_density_mass, PricingConfig};
use relbs::{
    bs_call, bs_put, lognormal_density, rel_call, rel_density, rel_parity_rhs, rel_put, DerivedParams, ModelParams,
};

fn desk() -> ModelParams {
    ModelParams::new(0.1, 0.5, 50.0, 1.0)
}

/// Full-line trapezoid of the pricing integrand, independent of the library's quadrature.
fn trapezoid_call(p: &ModelParams, strike: f64, c: f64) -> f64 {
    let var = p.sigma * p.sigma;
    let alpha = (0.5 * var - p.r) / var;
    let beta = (0.5 * var + p.r).powi(2) / (2.0 * var);
    let nu = c * c / var;
    let t = p.maturity;
    let omega = (p.spot / strike).ln();
    let f = |y: f64| {
        let decay = (-((c * c * y * y + nu * nu).sqrt() - nu) * t).exp();
        let a = Complex64::new(alpha, y);
        Complex64::from_polar(decay, omega * y) / (a * (a - 1.0))
    };
    let (lo, hi, n) = (-80.0, 80.0, 400_000);
    let h = (hi - lo) / n as f64;
    let mut sum = 0.5 * (f(lo) + f(hi));
    for i in 1..n {
        sum += f(lo + h * i as f64);
    }
    let integral = (sum * h).re;
    let gap = |k: f64| nu - (nu * nu - c * c * k * k).sqrt();
    let mut boundary = p.spot * (gap(1.0 - alpha) * t).exp();
    if alpha < 0.0 {
        boundary -= strike * (gap(alpha) * t).exp();
    }
    (-beta * t).exp() * (boundary + strike * (alpha * omega).exp() / (2.0 * std::f64::consts::PI) * integral)
}

#[test]
fn prices_match_trapezoid_oracle() {
    let p = desk();
    let cfg = PricingConfig::new(3.0)
        .with_quad(QuadratureConfig::default().with_abs_tol(1e-12).with_rel_tol(1e-12));
    for k in [30.0, 50.0, 80.0] {
        let lib = rel_call(&p, k, &cfg).unwrap().value;
        let oracle = trapezoid_call(&p, k, 3.0);
        assert!((lib - oracle).abs() < 1e-9, "K = {k}: {lib} vs {oracle}");
    }
    // frozen values from an independent high-precision evaluation
    for (k, frozen) in [(30.0, 23.82711), (50.0, 11.94304), (80.0, 3.95845)] {
        assert!((trapezoid_call(&p, k, 3.0) - frozen).abs() < 5e-6);
    }
}

#[test]
fn density_mass_matches_closed_form() {
    for (c, p) in [
        (0.6, desk()),
        (3.0, desk()),
        (1.0, ModelParams::new(0.02, 0.3, 100.0, 2.0)),
    ] {
        let d = DerivedParams::new(&p, c).unwrap();
        let t = p.maturity;
        let expected = ((p.r - d.beta + d.nu - (d.nu * d.nu - c * c * d.alpha * d.alpha).sqrt()) * t).exp();
        let spread = (14.0 * p.sigma * t.sqrt()).exp();
        let cfg = PricingConfig::new(c);
        let mass = rel_density_mass(&p, &cfg, p.spot / spread, p.spot * spread).unwrap();
        assert!((mass.mass - expected).abs() < 1e-6, "c = {c}: {} vs {expected}", mass.mass);
    }
}

#[test]
fn density_mean_matches_closed_form() {
    // tails decay like exp(-(c / sigma^2 - 1) |log K|), so keep c away from the low end
    let p = desk();
    let c = 3.0;
    let d = DerivedParams::new(&p, c).unwrap();
    let expected = p.spot
        * ((p.r - d.beta + d.nu - (d.nu * d.nu - c * c * (1.0 - d.alpha).powi(2)).sqrt()) * p.maturity).exp();
    let cfg = PricingConfig::new(c);
    let quad = QuadratureConfig::default().with_abs_tol(1e-10);
    let mean = integrate_real(
        |x: f64| {
            let k = x.exp();
            k * k * rel_density(&p, k, &cfg).unwrap()
        },
        (0.01f64).ln(),
        (5000.0f64).ln(),
        &quad,
    )
    .unwrap();
    assert!((mean.value.re / expected - 1.0).abs() < 1e-6, "{} vs {expected}", mean.value.re);
}

#[test]
fn lognormal_normalization_and_mean() {
    let p = desk().with_dividend_yield(0.02);
    let w = 10.0 * p.sigma * p.maturity.sqrt();
    let s = p.effective_spot();
    let quad = QuadratureConfig::default().with_abs_tol(1e-12);
    let mass = integrate_real(|x: f64| x.exp() * lognormal_density(&p, x.exp()).unwrap(), s.ln() - w, s.ln() + w, &quad)
        .unwrap();
    assert!((mass.value.re - 1.0).abs() < 1e-6);
    let mean = integrate_real(
        |x: f64| (2.0 * x).exp() * lognormal_density(&p, x.exp()).unwrap(),
        s.ln() - w,
        s.ln() + w + 2.0,
        &quad,
    )
    .unwrap();
    let forward = s * (p.r * p.maturity).exp();
    assert!((mean.value.re / forward - 1.0).abs() < 1e-6);
}

#[test]
fn low_speed_density_shape() {
    let p = desk();
    let cfg = PricingConfig::new(0.6);
    let g = |k: f64| rel_density(&p, k, &cfg).unwrap();
    let ln = |k: f64| lognormal_density(&p, k).unwrap();
    let peak = |f: &dyn Fn(f64) -> f64| {
        (200..800).map(|i| i as f64 * 0.1).map(|k| (k, f(k))).fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a })
    };
    let (k_rel, g_rel) = peak(&g);
    let (k_ln, g_ln) = peak(&ln);
    assert!(g_rel > g_ln && k_rel > k_ln, "relativistic peak ({k_rel}, {g_rel}) vs lognormal ({k_ln}, {g_ln})");
    assert!((k_rel - 43.8).abs() < 0.2 && (k_ln - 38.0).abs() < 0.2);
    for k in [5.0, 10.0] {
        assert!(g(k) > ln(k), "left tail at {k}");
    }
    for k in [100.0, 150.0] {
        assert!(g(k) < ln(k), "shoulder at {k}");
    }
    assert!(g(200.0) > ln(200.0));
    for i in 1..400 {
        assert!(g(i as f64 * 0.5) > 0.0);
    }
}

#[test]
fn dividend_yield_keeps_parity_and_limit() {
    let p = desk().with_dividend_yield(0.04);
    let cfg = PricingConfig::new(1e4)
        .with_quad(QuadratureConfig::default().with_abs_tol(1e-13).with_rel_tol(1e-13));
    for k in [35.0, 50.0, 65.0] {
        let call = rel_call(&p, k, &cfg).unwrap().value;
        let put = rel_put(&p, k, &cfg).unwrap().value;
        assert!((call - bs_call(&p, k).unwrap()).abs() < 1e-6);
        assert!((put - bs_put(&p, k).unwrap()).abs() < 1e-6);
        assert!((call - put - rel_parity_rhs(&p, k, &cfg).unwrap()).abs() < 1e-12 * p.spot);
    }
    let rhs = rel_parity_rhs(&p, 50.0, &cfg).unwrap();
    let classical = p.effective_spot() - 50.0 * (-p.r * p.maturity).exp();
    assert!((rhs - classical).abs() < 1e-6);
}

#[test]
fn call_decreasing_and_convex_in_strike() {
    let p = desk();
    let cfg = PricingConfig::new(2.0);
    let prices: Vec<f64> = (1..60).map(|i| rel_call(&p, i as f64 * 2.0, &cfg).unwrap().value).collect();
    for w in prices.windows(3) {
        assert!(w[1] < w[0]);
        assert!(w[0] - 2.0 * w[1] + w[2] > 0.0);
    }
}
