//! Truncated adaptive quadrature for complex integrands over the real line.
//!
//! Every integrand handled here decays at least exponentially, so the improper integral is
//! replaced by one over `[-Y, Y]` with `Y` picked from a certified tail envelope
//!
//! ```text
//! |f(y)| <= M exp(-lambda (|y| - y0))   for |y| >= y0
//! ```
//!
//! The finite part is resolved by globally adaptive 15-point Gauss-Kronrod bisection. When the
//! integrand is Hermitian (`f(-y) = conj(f(y))`) only `[0, Y]` is integrated and the result is
//! `2 Re`, which makes the imaginary part vanish exactly.

mod gauss_kronrod;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QuadratureError, Result};
use crate::params::invalid;
use gauss_kronrod::{gk15, PanelEstimate, NODES_PER_PANEL};

/// Cap on the number of oscillation-resolving initial panels.
const MAX_INITIAL_PANELS: usize = 100_000;

/// Tolerances and refinement limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections of any single panel.
    pub max_depth: u32,
    /// Budget for the neglected tails beyond the truncation point.
    pub tail_eps: f64,
    /// Maximum number of panels alive at once.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            max_depth: 40,
            tail_eps: 5e-10,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    /// Sets the absolute tolerance and ties the tail budget to half of it.
    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.tail_eps = 0.5 * abs_tol;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.abs_tol) || !positive(self.rel_tol) || !positive(self.tail_eps) {
            return Err(QuadratureError::Config(format!(
                "tolerances must be positive (abs_tol {}, rel_tol {}, tail_eps {})",
                self.abs_tol, self.rel_tol, self.tail_eps
            )));
        }
        if self.max_depth < 10 {
            return Err(QuadratureError::Config(format!(
                "max_depth must be at least 10, got {}",
                self.max_depth
            )));
        }
        if self.max_subdivisions < 8 {
            return Err(QuadratureError::Config(format!(
                "max_subdivisions must be at least 8, got {}",
                self.max_subdivisions
            )));
        }
        Ok(())
    }

    /// Same relative tolerance with the absolute tolerances multiplied by `factor`; used to
    /// move a tolerance between price units and integral units.
    pub(crate) fn scale_absolute(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            tail_eps: self.tail_eps * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    /// Estimated discretisation error of the finite-interval part.
    pub error_estimate: f64,
    pub panels_used: usize,
    pub evaluations: usize,
    /// Truncation point `Y`; zero for finite-interval integrals.
    pub truncation_point: f64,
    /// Certified bound on the neglected tails.
    pub truncation_bound: f64,
}

/// An integrand over the real line together with its decay envelope.
#[derive(Clone)]
pub struct IntegrandSpec<F> {
    pub evaluate: F,
    pub decay_rate: f64,
    pub magnitude_bound: f64,
    /// `y0` of the envelope.
    pub decay_start: f64,
    pub oscillation_frequency: f64,
    /// `f(-y) = conj(f(y))`, enabling the half-line reduction.
    pub hermitian: bool,
    /// Distance from the real axis of the nearest singularity above `y = 0`, if small.
    pub pole_distance: Option<f64>,
}

impl<F> std::fmt::Debug for IntegrandSpec<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegrandSpec")
            .field("decay_rate", &self.decay_rate)
            .field("magnitude_bound", &self.magnitude_bound)
            .field("decay_start", &self.decay_start)
            .field("oscillation_frequency", &self.oscillation_frequency)
            .field("hermitian", &self.hermitian)
            .field("pole_distance", &self.pole_distance)
            .finish_non_exhaustive()
    }
}

impl<F> IntegrandSpec<F>
where
    F: Fn(f64) -> Complex64,
{
    pub fn new(evaluate: F, decay_rate: f64, magnitude_bound: f64) -> Self {
        Self {
            evaluate,
            decay_rate,
            magnitude_bound,
            decay_start: 0.0,
            oscillation_frequency: 0.0,
            hermitian: false,
            pole_distance: None,
        }
    }

    /// Builds the envelope from a family of tangent bounds.
    ///
    /// `envelope(y0)` must return `(M, lambda)` with `|f(y)| <= M exp(-lambda (|y| - y0))` for
    /// all `|y| >= y0`, and the tail mass `2 M / lambda` must be nonincreasing in `y0`. The
    /// smallest `y0` whose tail mass fits in `tail_eps` is selected, so the truncation point
    /// lands on `y0` itself.
    pub fn with_tangent_envelope<E>(
        evaluate: F,
        envelope: E,
        tail_eps: f64,
    ) -> Result<Self, QuadratureError>
    where
        E: Fn(f64) -> (f64, f64),
    {
        if !(tail_eps.is_finite() && tail_eps > 0.0) {
            return Err(QuadratureError::Config(format!("tail_eps must be positive, got {tail_eps}")));
        }
        let tail = |y: f64| {
            let (m, lambda) = envelope(y);
            if lambda > 0.0 {
                2.0 * m / lambda
            } else {
                f64::INFINITY
            }
        };

        let mut hi = 1.0;
        while !(tail(hi) <= tail_eps) {
            hi *= 2.0;
            if hi > 1e15 {
                return Err(QuadratureError::Config(
                    "tail envelope never drops below tail_eps".to_string(),
                ));
            }
        }
        let mut lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if tail(mid) <= tail_eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }

        let (magnitude_bound, decay_rate) = envelope(hi);
        Ok(Self::new(evaluate, decay_rate, magnitude_bound).decay_start(hi))
    }

    pub fn decay_start(mut self, y0: f64) -> Self {
        self.decay_start = y0;
        self
    }

    pub fn oscillation_frequency(mut self, omega: f64) -> Self {
        self.oscillation_frequency = omega.abs();
        self
    }

    pub fn hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    pub fn full_line(mut self) -> Self {
        self.hermitian = false;
        self
    }

    pub fn pole_distance(mut self, distance: f64) -> Self {
        self.pole_distance = Some(distance.abs());
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.decay_rate.is_finite() && self.decay_rate > 0.0) {
            return Err(QuadratureError::Config(format!(
                "decay_rate must be positive, got {}",
                self.decay_rate
            )));
        }
        if !(self.magnitude_bound.is_finite() && self.magnitude_bound >= 0.0) {
            return Err(QuadratureError::Config(format!(
                "magnitude_bound must be finite and nonnegative, got {}",
                self.magnitude_bound
            )));
        }
        if !(self.decay_start.is_finite() && self.decay_start >= 0.0) {
            return Err(QuadratureError::Config(format!(
                "decay_start must be finite and nonnegative, got {}",
                self.decay_start
            )));
        }
        if !self.oscillation_frequency.is_finite() {
            return Err(QuadratureError::Config("oscillation_frequency must be finite".to_string()));
        }
        Ok(())
    }

    /// Bound on `int_{|y| > y_max} |f(y)| dy` implied by the envelope, for `y_max >= y0`.
    pub fn tail_bound(&self, y_max: f64) -> f64 {
        2.0 * self.magnitude_bound * (-self.decay_rate * (y_max - self.decay_start)).exp()
            / self.decay_rate
    }
}

/// Smallest `Y >= y0` whose envelope tail mass `2 M e^{-lambda (Y - y0)} / lambda` is within
/// `tail_eps`.
pub fn truncation_point<F>(spec: &IntegrandSpec<F>, cfg: &QuadratureConfig) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    spec.validate()?;
    cfg.validate()?;
    let at_start = spec.tail_bound(spec.decay_start);
    let extra = if at_start > cfg.tail_eps {
        (at_start / cfg.tail_eps).ln() / spec.decay_rate
    } else {
        0.0
    };
    let y_max = spec.decay_start + extra;
    Ok(if y_max > 0.0 { y_max } else { 1.0 })
}

/// Integral of `spec.evaluate` over the real line.
///
/// The discretisation target is `abs_tol + rel_tol |I|` less the tail bound actually incurred.
pub fn integrate<F>(spec: &IntegrandSpec<F>, cfg: &QuadratureConfig) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    let y_max = truncation_point(spec, cfg)?;
    let truncation_bound = spec.tail_bound(y_max);
    let lower = if spec.hermitian { 0.0 } else { -y_max };
    let breaks = initial_breakpoints(lower, y_max, spec.oscillation_frequency, spec.pole_distance);
    let abs_budget = (cfg.abs_tol - truncation_bound).max(0.5 * cfg.abs_tol);

    let reduction = if spec.hermitian {
        Reduction::Hermitian
    } else {
        Reduction::None
    };
    let outcome = adaptive(&spec.evaluate, &breaks, reduction, abs_budget, cfg)?;

    Ok(QuadratureResult {
        truncation_point: y_max,
        truncation_bound,
        ..outcome
    })
}

/// Integral of `f` over the finite interval `[a, b]`.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadratureError::Config(format!("invalid interval [{a}, {b}]")));
    }
    let breaks: Vec<f64> = (0..=4).map(|i| a + (b - a) * i as f64 / 4.0).collect();
    adaptive(&f, &breaks, Reduction::None, cfg.abs_tol, cfg)
}

/// Real-valued convenience wrapper around [`integrate_interval`].
pub fn integrate_real<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    integrate_interval(|x| Complex64::new(f(x), 0.0), a, b, cfg)
}

fn initial_breakpoints(lower: f64, upper: f64, omega: f64, pole: Option<f64>) -> Vec<f64> {
    let len = upper - lower;
    // each panel spans at most half an oscillation period
    let panels = ((len * omega / PI).ceil() as usize).clamp(8, MAX_INITIAL_PANELS);
    let mut breaks: Vec<f64> = (0..=panels)
        .map(|i| lower + len * i as f64 / panels as f64)
        .collect();
    breaks[panels] = upper;

    if lower < 0.0 {
        breaks.push(0.0);
    }
    if let Some(distance) = pole.filter(|d| *d > 0.0) {
        // geometric grading towards a singularity sitting close to y = 0
        let step = len / panels as f64;
        let mut b = distance;
        while b < step {
            breaks.push(b);
            if lower < 0.0 {
                breaks.push(-b);
            }
            b *= 4.0;
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

#[derive(Clone, Copy)]
enum Reduction {
    None,
    /// value = 2 Re(integral over the half line)
    Hermitian,
}

impl Reduction {
    fn finalize(self, z: Complex64) -> Complex64 {
        match self {
            Reduction::None => z,
            Reduction::Hermitian => Complex64::new(2.0 * z.re, 0.0),
        }
    }

    fn error_factor(self) -> f64 {
        match self {
            Reduction::None => 1.0,
            Reduction::Hermitian => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    estimate: PanelEstimate,
}

#[derive(Debug, PartialEq)]
struct Worst {
    error: f64,
    index: usize,
}

impl Eq for Worst {}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn estimate<F>(f: &F, a: f64, b: f64) -> Result<PanelEstimate, QuadratureError>
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    gk15(f, a, b).map_err(|at| QuadratureError::NonFinite { at })
}

fn adaptive<F>(
    f: &F,
    breaks: &[f64],
    reduction: Reduction,
    abs_budget: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let mut panels = Vec::with_capacity(breaks.len().max(cfg.max_subdivisions.min(4096)));
    for w in breaks.windows(2) {
        panels.push(Panel {
            a: w[0],
            b: w[1],
            depth: 0,
            estimate: estimate(f, w[0], w[1])?,
        });
    }
    let mut heap: BinaryHeap<Worst> = panels
        .iter()
        .enumerate()
        .map(|(index, p)| Worst {
            error: p.estimate.error,
            index,
        })
        .collect();

    let exact_totals = |panels: &[Panel]| {
        panels.iter().fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| {
            (v + p.estimate.value, e + p.estimate.error)
        })
    };
    let (mut total, mut total_error) = exact_totals(&panels);
    let mut evaluations = panels.len() * NODES_PER_PANEL;
    let target_of = |total: Complex64| abs_budget + cfg.rel_tol * reduction.finalize(total).norm();

    let mut since_resync = 0;
    loop {
        if reduction.error_factor() * total_error <= target_of(total) {
            // guard against drift in the running sums before accepting
            (total, total_error) = exact_totals(&panels);
            if reduction.error_factor() * total_error <= target_of(total) {
                break;
            }
        }

        let Some(Worst { index, .. }) = heap.pop() else {
            break;
        };
        let panel = panels[index];
        if panel.depth >= cfg.max_depth || panels.len() >= cfg.max_subdivisions {
            let (total, total_error) = exact_totals(&panels);
            return Err(QuadratureError::RefinementFailed {
                best: reduction.finalize(total),
                error_estimate: reduction.error_factor() * total_error,
                target: target_of(total),
                panels: panels.len(),
            });
        }

        let mid = 0.5 * (panel.a + panel.b);
        let left = Panel {
            a: panel.a,
            b: mid,
            depth: panel.depth + 1,
            estimate: estimate(f, panel.a, mid)?,
        };
        let right = Panel {
            a: mid,
            b: panel.b,
            depth: panel.depth + 1,
            estimate: estimate(f, mid, panel.b)?,
        };
        evaluations += 2 * NODES_PER_PANEL;

        total += left.estimate.value + right.estimate.value - panel.estimate.value;
        total_error += left.estimate.error + right.estimate.error - panel.estimate.error;

        panels[index] = left;
        heap.push(Worst {
            error: left.estimate.error,
            index,
        });
        panels.push(right);
        heap.push(Worst {
            error: right.estimate.error,
            index: panels.len() - 1,
        });

        since_resync += 1;
        if since_resync == 64 {
            since_resync = 0;
            (total, total_error) = exact_totals(&panels);
        }
    }

    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let (total, total_error) = exact_totals(&panels);
    Ok(QuadratureResult {
        value: reduction.finalize(total),
        error_estimate: reduction.error_factor() * total_error,
        panels_used: panels.len(),
        evaluations,
        truncation_point: 0.0,
        truncation_bound: 0.0,
    })
}

/// Right-hand side of the contour identity for the normal CDF,
///
/// ```text
/// N(tau) = i/(2 pi) * int_R exp(-(x + i theta)^2 / 2 - i tau (x + i theta)) / (x + i theta) dx
/// ```
///
/// valid for every `theta > 0`.
pub fn contour_cdf_integral(theta: f64, tau: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(invalid("theta", theta, "must be finite and positive"));
    }
    if !tau.is_finite() {
        return Err(invalid("tau", tau, "must be finite"));
    }
    let scale = Complex64::new(0.0, 1.0 / (2.0 * PI));
    let evaluate = move |x: f64| {
        let z = Complex64::new(x, theta);
        scale * (-0.5 * z * z - Complex64::new(0.0, tau) * z).exp() / z
    };
    // |f(x)| = exp(-x^2/2 + theta^2/2 + tau theta) / (2 pi |x + i theta|); tangent of -x^2/2 at x0
    let log_peak = 0.5 * theta * theta + tau * theta;
    let envelope = move |x0: f64| {
        let m = (log_peak - 0.5 * x0 * x0).exp() / (2.0 * PI * (x0 * x0 + theta * theta).sqrt());
        (m, x0)
    };
    let spec = IntegrandSpec::with_tangent_envelope(evaluate, envelope, cfg.tail_eps)?
        .oscillation_frequency(theta + tau)
        .pole_distance(theta)
        .hermitian();
    Ok(integrate(&spec, cfg)?)
}

pub fn contour_cdf(theta: f64, tau: f64, cfg: &QuadratureConfig) -> Result<f64> {
    contour_cdf_integral(theta, tau, cfg).map(|r| r.value.re)
}
