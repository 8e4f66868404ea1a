use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use conflate_bench::{bernoullis, counts, normals, quadrature_pair};
use conflate_core::conflate;
use conflate_core::conflation::{conflate_grid, conflate_with, GridOptions};
use conflate_core::diagnostics::max_information_loss;
use conflate_core::dyadic::{mu_j, oracle_conflation};
use conflate_core::sampler::sample_agree_discrete;

fn closed_form(c: &mut Criterion) {
    let mut g = c.benchmark_group("closed_form");
    for n in [2, 8, 32] {
        let specs = normals(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &specs, |b, s| {
            b.iter(|| conflate(black_box(s)))
        });
    }
    g.finish();
}

fn discrete(c: &mut Criterion) {
    let specs = counts();
    c.bench_function("discrete_product", |b| b.iter(|| conflate(black_box(&specs))));
}

fn grid(c: &mut Criterion) {
    let specs = quadrature_pair();
    let mut g = c.benchmark_group("grid");
    g.sample_size(20);
    g.bench_function("adaptive", |b| b.iter(|| conflate_grid(black_box(&specs), None)));
    for n in [1024, 4096] {
        let opts = GridOptions {
            base_points: n,
            max_refinements: 0,
            ..GridOptions::default()
        };
        g.bench_with_input(BenchmarkId::new("fixed", n), &opts, |b, o| {
            b.iter(|| conflate_with(black_box(&specs), o))
        });
    }
    g.finish();
}

fn dyadic(c: &mut Criterion) {
    let specs = normals(2);
    let mut g = c.benchmark_group("dyadic");
    g.sample_size(20);
    for j in [8, 12] {
        g.bench_with_input(BenchmarkId::new("mu_j", j), &j, |b, &j| {
            b.iter(|| mu_j(black_box(&specs), j, (-8.0, 8.0)))
        });
    }
    g.bench_function("oracle_bernoulli", |b| {
        b.iter(|| oracle_conflation(black_box(&bernoullis()), 12, 1e-4))
    });
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let specs = counts();
    let q = conflate(&specs).unwrap().to_spec();
    c.bench_function("max_information_loss_discrete", |b| {
        b.iter(|| max_information_loss(black_box(&q), &specs))
    });
}

fn sampler(c: &mut Criterion) {
    let specs = counts();
    let mut g = c.benchmark_group("sampler");
    g.sample_size(10);
    g.bench_function("agree_discrete_10k", |b| {
        b.iter(|| sample_agree_discrete(black_box(&specs), 10_000, 1, u64::MAX))
    });
    g.finish();
}

criterion_group!(benches, closed_form, discrete, grid, dyadic, diagnostics, sampler);
criterion_main!(benches);
