use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use feller_bench::symbols;
use feller_core::simulator::{
    intensity_probes, large_jump_intensity, path_rng, simulate_interlaced, IncrementSampler,
    StepConfig,
};
use feller_core::ExponentFamily;

fn increments(c: &mut Criterion) {
    let families = [
        ("brownian", ExponentFamily::Brownian, None),
        (
            "stable_0.8",
            ExponentFamily::IsotropicStable { alpha: 0.8 },
            None,
        ),
        (
            "stable_1.5",
            ExponentFamily::IsotropicStable { alpha: 1.5 },
            None,
        ),
        (
            "nts",
            ExponentFamily::NormalTemperedStable {
                alpha: 1.5,
                kappa: 2.0,
                beta: 0.5,
            },
            Some(1e-3),
        ),
    ];
    let mut g = c.benchmark_group("increment");
    for (name, fam, delta) in families {
        let s = IncrementSampler::new(&fam, 1, delta).unwrap();
        let mut rng = path_rng(1, 0);
        g.bench_function(name, |b| b.iter(|| s.sample(1e-2, &mut rng).unwrap()));
    }
    g.finish();
}

fn paths(c: &mut Criterion) {
    let cfg = StepConfig {
        horizon: 0.1,
        dt: 1e-3,
        record_all: false,
        ..StepConfig::default()
    };
    let mut g = c.benchmark_group("interlaced_path");
    g.sample_size(10);
    for (name, q) in symbols() {
        let lambda = large_jump_intensity(&q, &intensity_probes(1, 1e4))
            .unwrap()
            .lambda;
        let mut id = 0;
        g.bench_function(name, |b| {
            b.iter_batched(
                || {
                    id += 1;
                    path_rng(7, id)
                },
                |mut rng| simulate_interlaced(&q, lambda, &[0.5], &cfg, &mut rng).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, increments, paths);
criterion_main!(benches);
