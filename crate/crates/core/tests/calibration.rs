use proptest::prelude::*;
use relbs::calibration::{flatten_smile, inversion_quadrature, sigma_bracket, DEFAULT_TOL_SIGMA};
use relbs::market::{MarketContext, Quote, QuoteKind};
use relbs::{bs_call, implied_vol, rel_call, Error, IVQuery, Model, ModelParams, OptionSpec, PricingConfig};

fn dax() -> MarketContext {
    MarketContext {
        spot: 7268.91,
        rate: 0.05,
        yield_q: 0.0,
    }
}

#[test]
fn relativistic_round_trip_at_reference_point() {
    let p = ModelParams::new(0.1, 0.27, 50.0, 1.0);
    let cfg = PricingConfig::new(3.0).with_quad(inversion_quadrature());
    let target = rel_call(&p, 50.0, &cfg).unwrap().value;
    let s = implied_vol(&IVQuery::new(Model::Relativistic { c: 3.0 }, target, OptionSpec::call(50.0), p)).unwrap();
    assert!((s.sigma - 0.27).abs() <= DEFAULT_TOL_SIGMA);
    assert!(s.bracket[0] >= 1e-4 && s.bracket[1] < (2.0f64 * (3.0 - 0.1)).sqrt());
}

#[test]
fn twice_spot_has_no_solution() {
    let p = ModelParams::new(0.1, 0.5, 50.0, 1.0);
    for model in [Model::Classical, Model::Relativistic { c: 3.0 }] {
        match implied_vol(&IVQuery::new(model, 100.0, OptionSpec::call(50.0), p)) {
            Err(Error::NoSolution { high, .. }) => assert!(high < 100.0),
            other => panic!("{model:?}: {other:?}"),
        }
    }
}

#[test]
fn order_preserved_over_verified_range() {
    let p = ModelParams::new(0.1, 0.5, 50.0, 1.0);
    let cfg = PricingConfig::new(3.0).with_quad(inversion_quadrature());
    let mut last = 0.0;
    for sigma in [0.1, 0.2, 0.35, 0.5, 0.8] {
        let target = rel_call(&p.with_sigma(sigma), 50.0, &cfg).unwrap().value;
        let s = implied_vol(&IVQuery::new(Model::Relativistic { c: 3.0 }, target, OptionSpec::call(50.0), p))
            .unwrap()
            .sigma;
        assert!(s > last);
        last = s;
    }
}

#[test]
fn flatten_is_row_wise() {
    let rows: Vec<Quote> = [5500.0, 6500.0, 7269.0, 8000.0, 9000.0]
        .iter()
        .zip([0.29, 0.275, 0.27, 0.272, 0.28])
        .map(|(&strike, value)| Quote {
            strike,
            maturity: 0.5,
            value,
            line: 0,
        })
        .collect();
    let forward = flatten_smile(&rows, QuoteKind::Iv, dax(), 3.0, 1e-6);
    let mut reversed_rows = rows.clone();
    reversed_rows.reverse();
    let reversed = flatten_smile(&reversed_rows, QuoteKind::Iv, dax(), 3.0, 1e-6);
    let mut back = reversed.rows.clone();
    back.reverse();
    assert_eq!(forward.rows, back);
    assert!(forward.rows.iter().all(|r| r.flag.is_none()));
}

#[test]
fn price_quotes_are_inverted_classically_first() {
    let p = dax().params(0.3, 0.5);
    let rows: Vec<Quote> = [6000.0, 7000.0, 8000.0]
        .iter()
        .map(|&k| Quote {
            strike: k,
            maturity: 0.5,
            value: bs_call(&p, k).unwrap(),
            line: 0,
        })
        .collect();
    let report = flatten_smile(&rows, QuoteKind::Price, dax(), 1e4, 1e-6);
    for r in &report.rows {
        assert!((r.iv_classical.unwrap() - 0.3).abs() < 1e-6);
        assert!((r.iv_relativistic.unwrap() - 0.3).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classical_round_trip(sigma in 0.05f64..1.5, moneyness in 0.6f64..1.6, t in 0.1f64..3.0) {
        let p = ModelParams::new(0.03, sigma, 100.0, t);
        let k = 100.0 * moneyness;
        let target = bs_call(&p, k).unwrap();
        let s = implied_vol(&IVQuery::new(Model::Classical, target, OptionSpec::call(k), p)).unwrap();
        // flat vega in the wings widens the price band around the root
        prop_assert!((s.sigma - sigma).abs() <= 1e-5);
    }

    #[test]
    fn relativistic_round_trip(sigma in 0.15f64..0.8, moneyness in 0.8f64..1.25, c in 2.0f64..10.0) {
        let p = ModelParams::new(0.05, sigma, 100.0, 0.5);
        let k = 100.0 * moneyness;
        let cfg = PricingConfig::new(c).with_quad(inversion_quadrature());
        let target = rel_call(&p, k, &cfg).unwrap().value;
        let s = implied_vol(&IVQuery::new(Model::Relativistic { c }, target, OptionSpec::call(k), p)).unwrap();
        prop_assert!((s.sigma - sigma).abs() <= DEFAULT_TOL_SIGMA);
        let (_, hi) = sigma_bracket(Model::Relativistic { c }, 0.05).unwrap();
        prop_assert!(c > 0.5 * hi * hi + 0.05);
    }
}
