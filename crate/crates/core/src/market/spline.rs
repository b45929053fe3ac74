use crate::error::{Error, Result};

/// Natural cubic spline through `(x_i, y_i)`; second derivative vanishes at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    /// Knots must be finite and strictly ascending, at least two of them.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidTable(format!(
                "spline needs matching knot and value counts, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidTable("spline needs at least 2 knots".to_string()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTable("spline knots and values must be finite".to_string()));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidTable("spline knots must be strictly ascending".to_string()));
        }
        let m = second_derivatives(&x, &y);
        Ok(Self { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Value at `t` inside the closed knot range; no extrapolation.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let (min, max) = self.domain();
        if !(t >= min && t <= max) {
            return Err(Error::OutOfDomain { strike: t, min, max });
        }
        // largest i with x[i] <= t, capped so [x[i], x[i+1]] exists
        let i = self.x.partition_point(|&k| k <= t).saturating_sub(1).min(self.x.len() - 2);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        Ok(a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }
}

/// Thomas algorithm on the tridiagonal system for interior second derivatives.
fn second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = 2.0 * (h0 + h1);
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    for i in 2..n - 1 {
        let w = (x[i] - x[i - 1]) / diag[i - 1];
        diag[i] -= w * (x[i] - x[i - 1]);
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        m[i] = (rhs[i] - (x[i + 1] - x[i]) * m[i + 1]) / diag[i];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reproduces_knots_exactly() {
        let x = vec![1.0, 2.0, 3.5, 4.0, 7.0];
        let y = vec![0.3, -1.0, 2.0, 2.5, 0.0];
        let s = NaturalSpline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_abs_diff_eq!(s.eval(*xi).unwrap(), *yi, epsilon = 1e-14);
        }
    }

    #[test]
    fn linear_data_stays_linear() {
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let s = NaturalSpline::new(x, y).unwrap();
        assert_abs_diff_eq!(s.eval(1.234).unwrap(), 3.0 - 2.0 * 1.234, epsilon = 1e-13);
    }

    #[test]
    fn matches_hand_solved_three_knot_case() {
        // knots 0, 1, 2 with values 0, 1, 0: interior second derivative is -3
        let s = NaturalSpline::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(s.eval(0.5).unwrap(), 0.5 + (0.125 - 0.5) * -3.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_extrapolation_and_bad_knots() {
        let s = NaturalSpline::new(vec![1.0, 2.0, 3.0], vec![1.0, 4.0, 9.0]).unwrap();
        assert!(matches!(s.eval(0.99), Err(Error::OutOfDomain { .. })));
        assert!(s.eval(3.01).is_err());
        assert!(s.eval(f64::NAN).is_err());
        assert!(NaturalSpline::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(NaturalSpline::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn converges_on_smooth_function() {
        let x: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0 * 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = NaturalSpline::new(x, y).unwrap();
        // natural end conditions match sin'' = 0 at 0, slightly off at 3
        for t in [0.3, 1.1, 2.0] {
            assert_abs_diff_eq!(s.eval(t).unwrap(), t.sin(), epsilon = 1e-6);
        }
    }
}
