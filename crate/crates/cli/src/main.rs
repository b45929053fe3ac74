mod args;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;
use serde_json::json;

use relbs::calibration::{flatten_table, Dispersion, FlattenedRow};
use relbs::market::{density_comparison, load_quotes, smooth_curve, stencil_step, DensityCurve};
use relbs::quadrature::contour_cdf_integral;
use relbs::relativistic::convergence_report;
use relbs::{
    bs_price, implied_vol, norm_cdf, rel_price, Error, IVQuery, Model, ModelParams, OptionKind, OptionSpec,
    PricingConfig, QuadratureConfig,
};

use args::{Cli, Command, KindArg, MarketArgs, ModelArg};
use output::{row, Cell, Report, Table};

pub const QUAD_TOL_ENV: &str = "RELBS_QUAD_TOL";

enum Failure {
    /// Exit status 2.
    Usage(String),
    /// Exit status 1.
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::Infeasible { .. } => "infeasible",
        Error::Quadrature(_) => "quadrature",
        Error::OutOfRange(_) => "out_of_range",
        Error::NoSolution { .. } => "no_solution",
        Error::NonMonotonic { .. } => "non_monotonic",
        Error::Parse { .. } => "parse",
        Error::DuplicateQuote { .. } => "duplicate_quote",
        Error::InvalidTable(_) => "invalid_table",
        Error::OutOfDomain { .. } => "out_of_domain",
        Error::Stencil { .. } => "stencil",
        Error::Io(_) => "io",
    }
}

fn report_failure(kind: &str, message: &str, status: u8) -> ExitCode {
    let doc = json!({ "error": { "kind": kind, "message": message, "status": status } });
    eprintln!("{doc}");
    ExitCode::from(status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_failure("usage", e.to_string().trim_end(), 2),
    };
    let outcome = quad_config().and_then(|quad| dispatch(&cli.command, quad));
    let (report, check) = match outcome {
        Ok(Checked::Pass(r)) => (r, None),
        Ok(Checked::Fail(r, m)) => (r, Some(m)),
        Err(Failure::Usage(m)) => return report_failure("usage", &m, 2),
        Err(Failure::Domain(e)) => return report_failure(error_kind(&e), &e.to_string(), 1),
    };
    let text = output::render(report, &cli.output);
    if let Err(e) = output::write(&text, &cli.output.out) {
        return report_failure("io", &format!("writing {}: {e}", cli.output.out), 1);
    }
    match check {
        Some(m) => report_failure("check_failed", &m, 1),
        None => ExitCode::SUCCESS,
    }
}

/// A report, and for self-checks whether the check failed.
enum Checked {
    Pass(Report),
    Fail(Report, String),
}

/// Default pricing tolerances, with the absolute tolerance overridable from the environment.
fn quad_config() -> Result<QuadratureConfig, Failure> {
    let base = QuadratureConfig::default();
    match std::env::var(QUAD_TOL_ENV) {
        Err(_) => Ok(base),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(tol) if tol.is_finite() && tol > 0.0 => Ok(base.with_abs_tol(tol)),
            _ => Err(Failure::Usage(format!("{QUAD_TOL_ENV} must be a positive number, got {raw:?}"))),
        },
    }
}

fn dispatch(command: &Command, quad: QuadratureConfig) -> Result<Checked, Failure> {
    Ok(match command {
        Command::Price(a) => Checked::Pass(price(a, quad)?),
        Command::Iv(a) => Checked::Pass(iv(a)?),
        Command::Smile(a) => Checked::Pass(smile(a)?),
        Command::Density(a) => Checked::Pass(density(a)?),
        Command::Converge(a) => Checked::Pass(converge(a, quad)?),
        Command::VerifyLemma(a) => return verify_lemma(a),
    })
}

fn option(m: &MarketArgs) -> OptionSpec {
    match m.kind {
        KindArg::Call => OptionSpec::call(m.strike),
        KindArg::Put => OptionSpec::put(m.strike),
    }
}

fn params(m: &MarketArgs, sigma: f64) -> ModelParams {
    ModelParams::new(m.r, sigma, m.spot, m.maturity).with_dividend_yield(m.q)
}

fn speed(model: ModelArg, c: Option<f64>) -> Result<Option<f64>, Failure> {
    match (model, c) {
        (ModelArg::Rel, None) => Err(Failure::Usage("--c is required with --model rel".to_string())),
        (ModelArg::Rel, Some(c)) => Ok(Some(c)),
        (ModelArg::Bs, _) => Ok(None),
    }
}

fn kind_label(k: OptionKind) -> &'static str {
    match k {
        OptionKind::Call => "call",
        OptionKind::Put => "put",
    }
}

fn price(a: &args::PriceArgs, quad: QuadratureConfig) -> Result<Report, Failure> {
    let p = params(&a.market, a.sigma);
    let spec = option(&a.market);
    let inputs = json!({ "params": p, "option": spec });
    let mut table = Table::new(vec!["model", "kind", "strike", "value", "boundary_term", "integral_term"]);
    let json = match speed(a.model, a.c)? {
        None => {
            let value = bs_price(&p, &spec)?;
            table.rows.push(row(&[
                Cell::Text("bs"),
                Cell::Text(kind_label(spec.kind)),
                Cell::Num(spec.strike),
                Cell::Num(value),
                Cell::Missing,
                Cell::Missing,
            ]));
            json!({ "model": "bs", "inputs": inputs, "value": value })
        }
        Some(c) => {
            let cfg = PricingConfig::new(c).with_quad(quad);
            let r = rel_price(&p, &spec, &cfg)?;
            table.rows.push(row(&[
                Cell::Text("rel"),
                Cell::Text(kind_label(spec.kind)),
                Cell::Num(spec.strike),
                Cell::Num(r.value),
                Cell::Num(r.boundary_term),
                Cell::Num(r.integral_term),
            ]));
            json!({
                "model": "rel",
                "inputs": inputs,
                "c": c,
                "value": r.value,
                "boundary_term": r.boundary_term,
                "integral_term": r.integral_term,
                "integral_imag": r.integral_imag,
                "price_tolerance": r.price_tolerance,
                "derived": r.derived,
                "sigma_perturbation": r.sigma_perturbation,
                "quad": {
                    "error_estimate": r.quad_diag.error_estimate,
                    "panels_used": r.quad_diag.panels_used,
                    "evaluations": r.quad_diag.evaluations,
                    "truncation_point": r.quad_diag.truncation_point,
                    "truncation_bound": r.quad_diag.truncation_bound,
                    "abs_tol": quad.abs_tol,
                    "rel_tol": quad.rel_tol,
                },
            })
        }
    };
    Ok(Report::new(json, Some(table)))
}

fn iv(a: &args::IvArgs) -> Result<Report, Failure> {
    let model = match speed(a.model, a.c)? {
        None => Model::Classical,
        Some(c) => Model::Relativistic { c },
    };
    let p = params(&a.market, 1.0);
    let spec = option(&a.market);
    let s = implied_vol(&IVQuery::new(model, a.price, spec, p).with_tol_sigma(a.tol_sigma))?;
    let mut table = Table::new(vec!["sigma", "price", "iterations", "sigma_low", "sigma_high"]);
    table.rows.push(row(&[
        Cell::Num(s.sigma),
        Cell::Num(s.price),
        Cell::Int(s.iterations),
        Cell::Num(s.bracket[0]),
        Cell::Num(s.bracket[1]),
    ]));
    let json = json!({
        "inputs": { "model": model, "target_price": a.price, "option": spec, "params": { "r": p.r, "spot": p.spot, "maturity": p.maturity, "dividend_yield": p.dividend_yield }, "tol_sigma": a.tol_sigma },
        "sigma": s.sigma,
        "price": s.price,
        "iterations": s.iterations,
        "bracket": s.bracket,
        "band": s.band,
    });
    Ok(Report::new(json, Some(table)))
}

fn smile(a: &args::SmileArgs) -> Result<Report, Failure> {
    let table = load_quotes(&a.input)?;
    let report = flatten_table(&table, a.c, a.tol_sigma);
    let mut t = Table::new(vec!["strike", "maturity", "iv_classical", "target_price", "iv_relativistic", "flag"]);
    for r in &report.rows {
        let num = |x: Option<f64>| x.map_or(Cell::Missing, Cell::Num);
        t.rows.push(row(&[
            Cell::Num(r.strike),
            Cell::Num(r.maturity),
            num(r.iv_classical),
            num(r.target_price),
            num(r.iv_relativistic),
            r.flag.as_deref().map_or(Cell::Missing, Cell::Text),
        ]));
    }
    let Dispersion {
        count,
        std_classical,
        std_relativistic,
        ratio,
    } = report.dispersion;
    t.trailer = vec![
        ("count".to_string(), count.to_string()),
        ("std_classical".to_string(), output::fmt_number(std_classical)),
        ("std_relativistic".to_string(), output::fmt_number(std_relativistic)),
        ("ratio".to_string(), output::fmt_number(ratio)),
    ];

    #[derive(Serialize)]
    struct SmileReport<'a> {
        inputs: serde_json::Value,
        c: f64,
        rows: &'a [FlattenedRow],
        dispersion: Dispersion,
        flags: Vec<String>,
    }
    let flags = report
        .rows
        .iter()
        .filter_map(|r| r.flag.as_ref().map(|f| format!("strike {} maturity {}: {f}", r.strike, r.maturity)))
        .collect();
    let ctx = table.context();
    let json = SmileReport {
        inputs: json!({ "path": a.input, "spot": ctx.spot, "rate": ctx.rate, "yield": ctx.yield_q, "as_of": table.as_of(), "tol_sigma": a.tol_sigma }),
        c: a.c,
        rows: &report.rows,
        dispersion: report.dispersion,
        flags,
    };
    Ok(Report::new(json, Some(t)))
}

fn density(a: &args::DensityArgs) -> Result<Report, Failure> {
    let table = load_quotes(&a.input)?;
    let maturity = match a.maturity {
        Some(m) => m,
        None => table.maturities()[0],
    };
    let curve = smooth_curve(&table, maturity)?;
    let (lo, hi) = curve.domain();
    let margin = 2.0 * stencil_step(&curve);
    let n = a.points as usize;
    let grid: Vec<f64> = (0..n)
        .map(|i| (lo + margin) + (hi - lo - 2.0 * margin) * i as f64 / (n - 1) as f64)
        .collect();
    let cmp = density_comparison(&table, maturity, a.c, &grid)?;

    let mut t = Table::new(vec!["strike", "value", "source"]);
    for curve in [&cmp.market_implied, &cmp.relativistic, &cmp.lognormal] {
        push_curve(&mut t, curve);
    }
    t.trailer = vec![
        ("l1_relativistic".to_string(), output::fmt_number(cmp.l1_distances.relativistic)),
        ("l1_lognormal".to_string(), output::fmt_number(cmp.l1_distances.lognormal)),
    ];
    let mut inputs = serde_json::to_value(&cmp.inputs).expect("inputs serialize");
    inputs["path"] = json!(a.input);
    inputs["grid_points"] = json!(n);
    let json = json!({
        "inputs": inputs,
        "c": cmp.c,
        "l1_distances": cmp.l1_distances,
        "flags": cmp.flags,
    });
    Ok(Report::new(json, Some(t)))
}

fn push_curve(t: &mut Table, curve: &DensityCurve) {
    let label = curve.source.label();
    for (k, v) in curve.grid.iter().zip(&curve.values) {
        t.rows.push(row(&[Cell::Num(*k), Cell::Num(*v), Cell::Text(&label)]));
    }
}

fn converge(a: &args::ConvergeArgs, quad: QuadratureConfig) -> Result<Report, Failure> {
    let p = ModelParams::new(a.r, a.sigma, a.spot, a.maturity).with_dividend_yield(a.q);
    let report = convergence_report(&p, a.strike, &a.c_grid, &quad)?;
    let mut t = Table::new(vec!["c", "rel_price", "bs_price", "price_gap", "density_gap"]);
    for r in &report.rows {
        t.rows.push(row(&[
            Cell::Num(r.c),
            Cell::Num(r.rel_price),
            Cell::Num(r.bs_price),
            Cell::Num(r.price_gap),
            Cell::Num(r.density_gap),
        ]));
    }
    t.trailer = vec![
        ("strictly_decreasing".to_string(), report.strictly_decreasing.to_string()),
        ("within_threshold".to_string(), report.within_threshold.to_string()),
    ];
    let json = json!({
        "inputs": { "params": p, "strike": a.strike, "c_grid": a.c_grid, "abs_tol": quad.abs_tol, "rel_tol": quad.rel_tol },
        "rows": report.rows,
        "strictly_decreasing": report.strictly_decreasing,
        "threshold": report.threshold,
        "within_threshold": report.within_threshold,
        "density_grid": report.density_grid,
    });
    Ok(Report::new(json, Some(t)))
}

fn verify_lemma(a: &args::ContourArgs) -> Result<Checked, Failure> {
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(Failure::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let cfg = QuadratureConfig::default().with_abs_tol(1e-12);
    let res = contour_cdf_integral(a.theta, a.tau, &cfg)?;
    let expected = norm_cdf(a.tau);
    let gap = (res.value.re - expected).abs();
    let pass = gap <= a.tol;
    let mut t = Table::new(vec!["theta", "tau", "value", "norm_cdf", "abs_error", "pass"]);
    t.rows.push(row(&[
        Cell::Num(a.theta),
        Cell::Num(a.tau),
        Cell::Num(res.value.re),
        Cell::Num(expected),
        Cell::Num(gap),
        Cell::Text(if pass { "true" } else { "false" }),
    ]));
    let json = json!({
        "inputs": { "theta": a.theta, "tau": a.tau, "tol": a.tol },
        "value": res.value.re,
        "norm_cdf": expected,
        "abs_error": gap,
        "pass": pass,
        "evaluations": res.evaluations,
    });
    let report = Report::new(json, Some(t));
    Ok(if pass {
        Checked::Pass(report)
    } else {
        Checked::Fail(report, format!("contour value differs from N(tau) by {gap:e} > {}", a.tol))
    })
}
