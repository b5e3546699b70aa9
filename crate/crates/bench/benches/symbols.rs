use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use feller_bench::symbols;
use feller_core::checker::{check_growth_g, ProbeSchedule};
use feller_core::generator::{apply_characteristics, apply_fourier, TestFunction};
use feller_core::quad::QuadSpec;

fn eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("symbol_eval");
    for (name, q) in symbols() {
        g.bench_function(name, |b| {
            b.iter(|| q.eval(black_box(&[1.3]), black_box(&[0.7])).unwrap())
        });
    }
    g.finish();
}

fn generator(c: &mut Criterion) {
    let f = TestFunction::gaussian_bump(vec![0.0], 1.0).unwrap();
    let spec = QuadSpec::with_rel(1e-10);
    let mut g = c.benchmark_group("generator");
    g.sample_size(20);
    for (name, q) in symbols() {
        g.bench_function(format!("characteristics/{name}"), |b| {
            b.iter(|| apply_characteristics(&q, &f, black_box(&[0.4]), &spec).unwrap())
        });
        g.bench_function(format!("fourier/{name}"), |b| {
            b.iter(|| apply_fourier(&q, &f, black_box(&[0.4]), &spec).unwrap())
        });
    }
    g.finish();
}

fn growth(c: &mut Criterion) {
    let sched = ProbeSchedule::geometric(1, 9, 2, 8);
    let mut g = c.benchmark_group("check_growth_g");
    g.sample_size(20);
    for (name, q) in symbols() {
        g.bench_function(name, |b| b.iter(|| check_growth_g(&q, &sched).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, eval, generator, growth);
criterion_main!(benches);
