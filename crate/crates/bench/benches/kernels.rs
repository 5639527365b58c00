use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sympass_core::{
    approximate_symmetrization, compatible_polarizers, mountain_pass_value, polarize, schwarz, Domain, EnergySpec,
    Functional, GridFunction, LambdaFamily, MinimaxConfig, NormKind, SymmetrizationConfig,
};

fn rough(domain: Domain) -> GridFunction {
    GridFunction::from_fn(domain, |x| {
        (3.0 * x[0] + 1.7 * x[1]).sin() + 0.2 * x[0] - 0.1 * x[1] * x[1]
    })
    .unwrap()
}

fn rearrangement(c: &mut Criterion) {
    let line = Domain::line(8.0, 129).unwrap();
    let square = Domain::square(4.0, 33).unwrap();
    let u1 = rough(line);
    let u2 = rough(square);
    let h = compatible_polarizers(&square)[7];
    c.bench_function("polarize 2d 33x33", |b| {
        b.iter(|| polarize(black_box(&u2), &h).unwrap())
    });
    c.bench_function("schwarz 2d 33x33", |b| b.iter(|| schwarz(black_box(&u2))));
    let cfg = SymmetrizationConfig::default();
    let norm = NormKind::V { p: 2.0, pstar: 4.0 };
    c.bench_function("greedy symmetrization 1d n=129", |b| {
        b.iter(|| approximate_symmetrization(black_box(&u1), &cfg, norm, 0).unwrap())
    });
}

fn energy(c: &mut Criterion) {
    let line = LambdaFamily::new(EnergySpec::default(), Domain::line(8.0, 129).unwrap()).unwrap();
    let plane = LambdaFamily::new(EnergySpec::default(), Domain::square(4.0, 33).unwrap()).unwrap();
    let u1 = rough(*line.domain()).into_values();
    let u2 = rough(*plane.domain()).into_values();
    c.bench_function("gradient 1d n=129", |b| {
        b.iter(|| line.gradient(1.0, black_box(&u1)).unwrap())
    });
    c.bench_function("slope 1d n=129", |b| {
        b.iter(|| line.slope(1.0, black_box(&u1)).unwrap())
    });
    c.bench_function("slope 2d 33x33", |b| {
        b.iter(|| plane.slope(1.0, black_box(&u2)).unwrap())
    });
}

fn minimax(c: &mut Criterion) {
    let fam = LambdaFamily::new(EnergySpec::default(), Domain::line(8.0, 129).unwrap()).unwrap();
    let cfg = MinimaxConfig::default();
    let mut group = c.benchmark_group("minimax");
    group.sample_size(10);
    group.bench_function("mountain pass 1d n=129", |b| {
        b.iter(|| mountain_pass_value(&fam, black_box(1.0), &cfg, 1, 0).unwrap())
    });
    group.finish();
}

criterion_group!(kernels, rearrangement, energy, minimax);
criterion_main!(kernels);
