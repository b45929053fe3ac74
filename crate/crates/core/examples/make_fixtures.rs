//! Writes the synthetic market fixtures into `fixtures/` at the workspace root.
//!
//! Every fixture is model-generated: relativistic call prices are converted to classical implied
//! vols, optionally tilted by a term linear in log-moneyness.

use std::fmt::Write as _;
use std::path::PathBuf;

use relbs::calibration::inversion_quadrature;
use relbs::{implied_vol, rel_call, IVQuery, Model, ModelParams, OptionSpec, PricingConfig};

struct Fixture {
    file: &'static str,
    comment: &'static str,
    spot: f64,
    rate: f64,
    sigma: f64,
    c: f64,
    maturities: &'static [f64],
    strikes: Vec<f64>,
    /// Log-strike at which the tilted smile bottoms out.
    lowest_at: Option<f64>,
    digits: usize,
}

fn classical_iv(p: &ModelParams, strike: f64, c: f64) -> f64 {
    let cfg = PricingConfig::new(c).with_quad(inversion_quadrature());
    let price = rel_call(p, strike, &cfg).expect("fixture parameters are feasible").value;
    let q = IVQuery::new(Model::Classical, price, OptionSpec::call(strike), *p).with_tol_sigma(1e-12);
    implied_vol(&q).expect("relativistic price lies in the classical band").sigma
}

/// Least-squares quadratic `a x^2 + b x + c`; returns `(a, b)`.
fn quadratic_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let s = |k: i32| x.iter().map(|v| v.powi(k)).sum::<f64>();
    let t = |k: i32| x.iter().zip(y).map(|(v, w)| v.powi(k) * w).sum::<f64>();
    let m = [[s(4), s(3), s(2)], [s(3), s(2), s(1)], [s(2), s(1), n]];
    let r = [t(2), t(1), t(0)];
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    let with = |col: usize| {
        let mut mm = m;
        for (row, v) in mm.iter_mut().zip(r) {
            row[col] = v;
        }
        det(mm) / d
    };
    (with(0), with(1))
}

/// Log-strike of the minimum of the parabola through the lowest sample and its neighbours.
fn sample_minimum(x: &[f64], y: &[f64]) -> f64 {
    let j = (0..y.len()).min_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap().clamp(1, y.len() - 2);
    let (x0, x1, x2) = (x[j - 1], x[j], x[j + 1]);
    let (y0, y1, y2) = (y[j - 1], y[j], y[j + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    x1 - 0.5 * num / den
}

/// Slope of the linear tilt that moves the sampled minimum to `target`.
fn tilt_for_minimum(x: &[f64], y: &[f64], target: f64) -> f64 {
    let (a, b) = quadratic_fit(x, y);
    let mut aim = target;
    let mut slope = 0.0;
    for _ in 0..50 {
        slope = -2.0 * a * aim - b;
        let tilted: Vec<f64> = y.iter().zip(x).map(|(v, xi)| v + slope * xi).collect();
        aim += target - sample_minimum(x, &tilted);
    }
    slope
}

fn render(f: &Fixture) -> String {
    let mut out = String::new();
    writeln!(out, "# {}", f.comment).unwrap();
    writeln!(out, "# spot={} rate={} yield=0 as_of=synthetic", f.spot, f.rate).unwrap();
    writeln!(out, "strike,maturity,quote,quote_kind").unwrap();
    for &t in f.maturities {
        let p = ModelParams::new(f.rate, f.sigma, f.spot, t);
        let ivs: Vec<f64> = f.strikes.iter().map(|&k| classical_iv(&p, k, f.c)).collect();
        let x: Vec<f64> = f.strikes.iter().map(|k| (k / f.spot).ln()).collect();
        let slope = match f.lowest_at {
            Some(target) => tilt_for_minimum(&x, &ivs, (target / f.spot).ln()),
            None => 0.0,
        };
        for ((k, iv), xi) in f.strikes.iter().zip(&ivs).zip(&x) {
            writeln!(out, "{k},{t},{:.*},iv", f.digits, iv + slope * xi).unwrap();
        }
    }
    out
}

fn main() {
    let dax_spot = 7268.91;
    let dax_strikes: Vec<f64> = (0..15).map(|i| (dax_spot * (0.65 + 0.05 * i as f64)).round()).collect();
    let google_spot = 866.2;
    let google_strikes: Vec<f64> = (0..=60).map(|i| 500.0 + 15.0 * i as f64).collect();

    let fixtures = [
        Fixture {
            file: "dax_like_smile.csv",
            comment: "standard smile: relativistic prices at sigma 0.27 and c 3 quoted as classical vols, tilted to bottom out near 7400",
            spot: dax_spot,
            rate: 0.05,
            sigma: 0.27,
            c: 3.0,
            maturities: &[0.25, 0.5, 1.0],
            strikes: dax_strikes.clone(),
            lowest_at: Some(7400.0),
            digits: 8,
        },
        Fixture {
            file: "roundtrip_sigma025.csv",
            comment: "exact round trip: relativistic prices at sigma 0.25 and c 3 quoted as classical vols",
            spot: dax_spot,
            rate: 0.05,
            sigma: 0.25,
            c: 3.0,
            maturities: &[0.5],
            strikes: dax_strikes,
            lowest_at: None,
            digits: 15,
        },
        Fixture {
            file: "skew_c06.csv",
            comment: "relativistic prices at sigma 0.3 and c 0.6 quoted as classical vols",
            spot: google_spot,
            rate: 0.01,
            sigma: 0.3,
            c: 0.6,
            maturities: &[0.5],
            strikes: google_strikes.clone(),
            lowest_at: None,
            digits: 15,
        },
        Fixture {
            file: "google_like_skew.csv",
            comment: "skew: relativistic prices at sigma 0.3 and c 0.6 quoted as classical vols, tilted to bottom out near 1050",
            spot: google_spot,
            rate: 0.01,
            sigma: 0.3,
            c: 0.6,
            maturities: &[0.5],
            strikes: google_strikes,
            lowest_at: Some(1050.0),
            digits: 10,
        },
    ];

    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    std::fs::create_dir_all(&dir).expect("fixture directory");
    for f in &fixtures {
        let path = dir.join(f.file);
        std::fs::write(&path, render(f)).expect("write fixture");
        println!("wrote {}", path.display());
    }
}
