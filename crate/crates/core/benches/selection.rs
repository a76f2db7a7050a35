use std::hint::black_box;

use consensus_core::geometry::{global_medoid, pairwise_distances};
use consensus_core::latency::bimodal_batch;
use consensus_core::{select, Metric, SelectorConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn selection(c: &mut Criterion) {
    let mut group = c.benchmark_group("select");
    let config = SelectorConfig::default();
    for &(k, dim) in &[(4, 2048), (16, 256), (16, 2048), (32, 2048), (16, 8192)] {
        let batch = bimodal_batch(k, dim, &mut ChaCha8Rng::seed_from_u64(1));
        group.throughput(Throughput::Elements(k as u64));
        group.bench_with_input(
            BenchmarkId::new(format!("K={k}"), dim),
            &batch,
            |b, batch| b.iter(|| select(black_box(batch), &config).unwrap()),
        );
    }
    group.finish();
}

fn geometry(c: &mut Criterion) {
    let mut group = c.benchmark_group("distances");
    let batch = bimodal_batch(16, 2048, &mut ChaCha8Rng::seed_from_u64(2));
    for metric in [Metric::Euclidean, Metric::Cosine] {
        group.bench_function(BenchmarkId::new("pairwise+medoid", metric), |b| {
            b.iter(|| global_medoid(&pairwise_distances(black_box(&batch), metric)))
        });
    }
    group.finish();
}

criterion_group!(benches, selection, geometry);
criterion_main!(benches);
