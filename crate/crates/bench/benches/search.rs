use criterion::{criterion_group, criterion_main, Criterion};
use lehmer_bench::{level, small_search};
use lehmer_core::verify::chain_sweep;
use lehmer_core::{exhaustive_search, run_suite, search_a, search_b, Limits, Suite};
use std::hint::black_box;

fn exhaustive(c: &mut Criterion) {
    c.bench_function("exhaustive_search 1e6", |b| {
        b.iter(|| exhaustive_search(black_box(1_000_000), 1).unwrap())
    });
}

fn repunit(c: &mut Criterion) {
    let even = small_search(1000, 1);
    c.bench_function("search_a L=14", |b| {
        b.iter(|| search_a(&level("14"), &even).unwrap())
    });
    let odd = small_search(10_000, 100);
    c.bench_function("search_b L=2 n_max=1e4", |b| {
        b.iter(|| search_b(&level("2"), &odd).unwrap())
    });
    let odd = small_search(40, 16);
    c.bench_function("search_b L=14 16 evaluations", |b| {
        b.iter(|| search_b(&level("14"), &odd).unwrap())
    });
}

fn suites(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    for suite in Suite::ALL {
        g.bench_function(suite.name(), |b| {
            b.iter(|| run_suite(suite, 200, 1, &Limits::default()).unwrap())
        });
    }
    g.bench_function("chain_sweep 1e5", |b| {
        b.iter(|| chain_sweep(100_000, 1).unwrap())
    });
    g.finish();
}

criterion_group!(benches, exhaustive, repunit, suites);
criterion_main!(benches);
