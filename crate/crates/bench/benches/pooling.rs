use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relpool::gin::gin_graph_embedding;
use relpool::graph::{Graph, Permutation};
use relpool::rp::{kary_rp, rp_exact_joint, rp_gnn_sampled, KaryMode};
use relpool::wl::{wl_fingerprint, wl_refine};
use relpool_bench::{csl, random_graph, seeded_gin, weighted_sin};

fn permute(c: &mut Criterion) {
    let mut group = c.benchmark_group("permute");
    for n in [10, 41, 100] {
        let g = random_graph(n, 0.2, 1);
        let p = Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(2));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| g.permute(black_box(&p))));
    }
    group.finish();
}

fn wl(c: &mut Criterion) {
    let g = csl(41, 9);
    c.bench_function("wl_refine/csl41", |b| b.iter(|| wl_refine(black_box(&g), 42)));
    c.bench_function("wl_fingerprint/csl41", |b| b.iter(|| wl_fingerprint(black_box(&g))));
}

fn gin(c: &mut Criterion) {
    let g = csl(41, 9);
    let (model, store) = seeded_gin(1, 3);
    c.bench_function("gin_embedding/csl41", |b| b.iter(|| gin_graph_embedding(black_box(&g), &model, &store)));

    let (rp_model, rp_store) = seeded_gin(11, 3);
    c.bench_function("rp_gin_sampled_5/csl41", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        b.iter(|| rp_gnn_sampled(black_box(&g), &rp_model, &rp_store, 10, 5, &mut rng))
    });
}

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("rp_exact_joint");
    group.sample_size(10);
    for n in [5, 6, 7] {
        let g = random_graph(n, 0.5, 5);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| rp_exact_joint(g, &weighted_sin))
        });
    }
    group.finish();
}

fn kary(c: &mut Criterion) {
    let mut group = c.benchmark_group("kary_exact_n12");
    group.sample_size(10);
    let g: Graph = random_graph(12, 0.3, 6);
    for k in [2, 3, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            b.iter(|| kary_rp(&g, &weighted_sin, k, KaryMode::Exact, false, &mut rng))
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().measurement_time(Duration::from_secs(3)).warm_up_time(Duration::from_secs(1));
    targets = permute, wl, gin, exact, kary
}
criterion_main!(benches);
