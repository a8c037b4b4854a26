use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kramers_core::saddle::{random_saddle, transverse_matrices};
use kramers_core::sde::{default_config, hitting_time_stats};
use kramers_core::{analyze, assemble, find_critical_points, parse, preset, small_spectrum, Form, Grid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn expressions(c: &mut Criterion) {
    let src = "(x^2 - 1)^2 + 0.3*x + y^2 + sin(x*y)/(1 + exp(-y))";
    c.bench_function("parse", |b| b.iter(|| parse(black_box(src), 2).unwrap()));
    let e = parse(src, 2).unwrap();
    c.bench_function("hessian_symbolic", |b| b.iter(|| black_box(&e).diff(0).diff(1)));
}

fn saddles(c: &mut Criterion) {
    let mut group = c.benchmark_group("transverse_matrices");
    for d in [2usize, 5] {
        let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
        let (hess, b) = random_saddle(&mut rng, d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |bench, _| {
            bench.iter(|| transverse_matrices(black_box(&hess), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn operators(c: &mut Criterion) {
    let land = preset("tilted_double_well", None, 1.0).unwrap();
    let cps = find_critical_points(&land, 32).unwrap();
    c.bench_function("labelling_n128", |b| b.iter(|| analyze(&land, &cps, 128).unwrap()));

    let mut group = c.benchmark_group("operator");
    group.sample_size(10);
    for n in [97usize, 161] {
        let grid = Grid::new(land.half_width, n).unwrap();
        group.bench_with_input(BenchmarkId::new("assemble", n), &n, |b, _| {
            b.iter(|| assemble(&land, &cps, 0.2, &grid, Form::LWeighted).unwrap())
        });
        let op = assemble(&land, &cps, 0.2, &grid, Form::LWeighted).unwrap();
        group.bench_with_input(BenchmarkId::new("small_spectrum", n), &n, |b, _| {
            b.iter(|| small_spectrum(&op, 6, false).unwrap())
        });
    }
    group.finish();
}

fn hitting_times(c: &mut Criterion) {
    let land = preset("tilted_double_well", None, 0.0).unwrap();
    let cps = find_critical_points(&land, 32).unwrap();
    let lab = analyze(&land, &cps, 128).unwrap();
    let cfg = default_config(&land, &cps, &lab.wellmap, 0.3, 64, 7).unwrap();
    let mut group = c.benchmark_group("sde");
    group.sample_size(10);
    group.bench_function("hitting_time_64_trials", |b| b.iter(|| hitting_time_stats(&land, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, expressions, saddles, operators, hitting_times);
criterion_main!(benches);
