//! Standard normal distribution.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
///
/// Evaluated through `erfc` on the side where it does not cancel, which keeps the absolute
/// error near machine epsilon across the whole real line.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    // erf(z) = 2/sqrt(pi) * exp(-z^2) * sum_n 2^n z^(2n+1) / (1*3*...*(2n+1)); every term is
    // positive so the partial sums never cancel.
    fn cdf_series(x: f64) -> f64 {
        let z = x.abs() * FRAC_1_SQRT_2;
        let mut term = z;
        let mut sum = z;
        let mut n = 0.0;
        while term > 1e-18 * sum {
            n += 1.0;
            term *= 2.0 * z * z / (2.0 * n + 1.0);
            sum += term;
        }
        let erf = 2.0 / PI.sqrt() * (-z * z).exp() * sum;
        if x >= 0.0 {
            0.5 * (1.0 + erf)
        } else {
            0.5 * (1.0 - erf)
        }
    }

    #[test]
    fn matches_series_on_grid() {
        let worst = (-80..=80)
            .map(|i| i as f64 / 10.0)
            .map(|x| (norm_cdf(x) - cdf_series(x)).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "worst error {worst:e}");
    }

    #[test]
    fn reference_points() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(1.959964) - 0.975).abs() < 1e-6);
        assert!((cdf_series(1.959964) - 0.975).abs() < 1e-6);
        for x in [-3.2, -0.7, 0.1, 2.5] {
            assert!((norm_cdf(x) - (1.0 - norm_cdf(-x))).abs() < 1e-15);
        }
    }

    #[test]
    fn monotone_and_bounded() {
        let mut prev = 0.0;
        for i in -400..=400 {
            let v = norm_cdf(i as f64 / 40.0);
            assert!(v >= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }
}
