use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use relbs::calibration::inversion_quadrature;
use relbs::quadrature::{contour_cdf, QuadratureConfig};
use relbs::{bs_call, implied_vol, rel_call, rel_density, IVQuery, Model, OptionSpec};
use relbs_bench::{desk, pricing, SPEEDS, STRIKES};

fn call_prices(c: &mut Criterion) {
    let mut group = c.benchmark_group("rel_call");
    for speed in SPEEDS {
        for k in STRIKES {
            let cfg = pricing(speed);
            group.bench_with_input(BenchmarkId::new(format!("c={speed}"), k), &k, |b, &k| {
                b.iter(|| rel_call(&desk(), black_box(k), &cfg).unwrap().value)
            });
        }
    }
    group.finish();
    c.bench_function("bs_call", |b| b.iter(|| bs_call(&desk(), black_box(50.0)).unwrap()));
}

fn densities(c: &mut Criterion) {
    let mut group = c.benchmark_group("rel_density");
    for speed in SPEEDS {
        let cfg = pricing(speed);
        group.bench_with_input(BenchmarkId::from_parameter(speed), &speed, |b, _| {
            b.iter(|| rel_density(&desk(), black_box(45.0), &cfg).unwrap())
        });
    }
    group.finish();
}

fn inversion(c: &mut Criterion) {
    let cfg = pricing(3.0).with_quad(inversion_quadrature());
    let target = rel_call(&desk(), 50.0, &cfg).unwrap().value;
    let query = IVQuery::new(Model::Relativistic { c: 3.0 }, target, OptionSpec::call(50.0), desk());
    c.bench_function("implied_vol/relativistic", |b| b.iter(|| implied_vol(black_box(&query)).unwrap().sigma));
    let classical = IVQuery::new(Model::Classical, 11.96, OptionSpec::call(50.0), desk());
    c.bench_function("implied_vol/classical", |b| b.iter(|| implied_vol(black_box(&classical)).unwrap().sigma));
}

fn contour(c: &mut Criterion) {
    let cfg = QuadratureConfig::default().with_abs_tol(1e-12);
    c.bench_function("contour_cdf", |b| b.iter(|| contour_cdf(black_box(1.0), black_box(0.5), &cfg).unwrap()));
}

criterion_group!(benches, call_prices, densities, inversion, contour);
criterion_main!(benches);
