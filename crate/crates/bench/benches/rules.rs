use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cq_core::cubature::{reduce, tensor_rule, ReductionMode};
use cq_core::genz::{random_spec, evaluate, GenzFamily};
use cq_core::{
    clenshaw_curtis_rule, gauss_rule, nested_family, smolyak_rule, ClenshawCurtisFamily, Distribution,
    ReductionCriterion, RuleFamily,
};

fn one_dimensional(c: &mut Criterion) {
    let u = Distribution::uniform(-1.0, 1.0).unwrap();
    let b = Distribution::beta(4.0, 4.0).unwrap();
    let mut g = c.benchmark_group("rules_1d");
    for n in [9, 33, 129] {
        g.bench_with_input(BenchmarkId::new("gauss", n), &n, |bench, &n| {
            bench.iter(|| gauss_rule(&b, black_box(n)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("clenshaw_curtis", n), &n, |bench, &n| {
            bench.iter(|| clenshaw_curtis_rule(&u, black_box(n)).unwrap())
        });
    }
    for n in [9, 17, 33] {
        let rule = gauss_rule(&b, n).unwrap();
        g.bench_with_input(BenchmarkId::new("nested_family", n), &rule, |bench, rule| {
            bench.iter(|| nested_family(black_box(rule), ReductionCriterion::Prior).unwrap())
        });
    }
    g.finish();
}

fn smolyak(c: &mut Criterion) {
    let cc = ClenshawCurtisFamily::new(Distribution::uniform(-1.0, 1.0).unwrap()).unwrap();
    let families: [&dyn RuleFamily; 1] = [&cc];
    let mut g = c.benchmark_group("smolyak_cc");
    for (d, level) in [(2, 6), (5, 8), (10, 12)] {
        g.bench_function(BenchmarkId::new(format!("d{d}"), level), |bench| {
            bench.iter(|| smolyak_rule(&families, black_box(level), d).unwrap())
        });
    }
    g.finish();
}

fn cubature_reduction(c: &mut Criterion) {
    let u = Distribution::uniform(-1.0, 1.0).unwrap();
    let mut g = c.benchmark_group("cubature_reduction");
    g.sample_size(10);
    for (d, n, k) in [(2, 9, 9), (3, 5, 7), (5, 3, 5)] {
        let axis = gauss_rule(&u, n).unwrap();
        let t = tensor_rule(&vec![axis; d]).unwrap();
        for mode in [ReductionMode::Positive, ReductionMode::Symmetric, ReductionMode::Negative] {
            g.bench_with_input(BenchmarkId::new(format!("{mode}_d{d}"), k), &t, |bench, t| {
                bench.iter(|| reduce(black_box(t), mode, k, ReductionCriterion::Prior))
            });
        }
    }
    g.finish();
}

fn genz_integration(c: &mut Criterion) {
    let u = Distribution::uniform(0.0, 1.0).unwrap();
    let axis = gauss_rule(&u, 4).unwrap();
    let t = tensor_rule(&vec![axis; 5]).unwrap();
    let mut g = c.benchmark_group("genz_d5");
    for family in GenzFamily::ALL {
        let spec = random_spec(family, 5, 7);
        g.bench_function(family.to_string(), |bench| {
            bench.iter(|| t.integrate(|x| evaluate(black_box(&spec), x)))
        });
    }
    g.finish();
}

criterion_group!(benches, one_dimensional, smolyak, cubature_reduction, genz_integration);
criterion_main!(benches);
