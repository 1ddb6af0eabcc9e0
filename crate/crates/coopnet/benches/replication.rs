//! Replicate-batch throughput: sequential loop vs the default harness
//! (rayon pool when the `parallel` feature is on). Same seeds, same work,
//! so the comparison isolates scheduling overhead / speedup.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use coopnet::dynamics::run_episode;
use coopnet::policy::PolicyRecommender;
use coopnet::replicate::{run_replicates, run_replicates_sequential};
use coopnet::rng::replicate_seed;
use coopnet::{GameMatrix, RewirePolicy, SimConfig};

fn one_episode(base_seed: u64, index: usize) -> f64 {
    let mut cfg = SimConfig::new(100, 8, 0.05, 1.0, 10_000, 0).unwrap();
    cfg.seed = replicate_seed(base_seed, index);
    let game = GameMatrix::prisoners_dilemma();
    let mut rec = PolicyRecommender::new(RewirePolicy::GOOD);
    run_episode(&cfg, &game, &mut rec).unwrap().coop_fraction
}

fn bench_replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("replicates");
    group.sample_size(10);
    for &count in &[4usize, 16] {
        group.bench_with_input(
            BenchmarkId::new("sequential", count),
            &count,
            |b, &count| {
                b.iter(|| run_replicates_sequential(count, |i| one_episode(1, i)));
            },
        );
        group.bench_with_input(BenchmarkId::new("default", count), &count, |b, &count| {
            b.iter(|| run_replicates(count, |i| one_episode(1, i)));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_replicates);
criterion_main!(benches);
