//! Wall-clock cost of one selection call, reported as percentiles.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::batch::CandidateBatch;
use crate::selector::{select, SelectError, SelectorConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub samples: usize,
    pub dim: usize,
    pub iterations: usize,
    pub p50: Duration,
    pub p99: Duration,
    pub mean: Duration,
    pub max: Duration,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[Duration], q: f64) -> Duration {
    assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// A two-mode batch (roughly 3:1) so the guard fails and the k-means branch
/// runs, which is the expensive path.
pub fn bimodal_batch(samples: usize, dim: usize, rng: &mut impl Rng) -> CandidateBatch {
    let vectors = (0..samples)
        .map(|i| {
            let offset = if i % 4 == 3 { 5.0 } else { 0.0 };
            (0..dim)
                .map(|_| offset + 0.1 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    CandidateBatch::from_flat(1, dim, vectors).expect("generated values are finite")
}

/// Time `iterations` selections, each on a fresh batch, after a short warmup.
pub fn measure_selection(
    samples: usize,
    dim: usize,
    iterations: usize,
    config: &SelectorConfig,
    seed: u64,
) -> Result<LatencyReport, SelectError> {
    assert!(samples >= 1 && dim >= 1 && iterations >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = (iterations / 10).clamp(1, 50);
    for _ in 0..warmup {
        std::hint::black_box(select(&bimodal_batch(samples, dim, &mut rng), config)?);
    }
    let mut times = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let batch = bimodal_batch(samples, dim, &mut rng);
        let start = Instant::now();
        std::hint::black_box(select(std::hint::black_box(&batch), config)?);
        times.push(start.elapsed());
    }
    times.sort_unstable();
    let total: Duration = times.iter().sum();
    Ok(LatencyReport {
        samples,
        dim,
        iterations,
        p50: percentile(&times, 0.50),
        p99: percentile(&times, 0.99),
        mean: total / iterations as u32,
        max: *times.last().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<Duration> = (1..=100).map(Duration::from_micros).collect();
        assert_eq!(percentile(&v, 0.5), Duration::from_micros(50));
        assert_eq!(percentile(&v, 0.99), Duration::from_micros(99));
        assert_eq!(percentile(&v, 1.0), Duration::from_micros(100));
        assert_eq!(percentile(&v[..1], 0.99), Duration::from_micros(1));
    }

    #[test]
    fn bimodal_batch_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = bimodal_batch(16, 32, &mut rng);
        let r = select(&b, &SelectorConfig::default()).unwrap();
        assert!(!r.unimodal);
        let mut sizes = r.cluster_sizes.clone();
        sizes.sort();
        assert_eq!(sizes, vec![4, 12]);
    }

    #[test]
    fn report_is_ordered() {
        let r = measure_selection(8, 16, 20, &SelectorConfig::default(), 1).unwrap();
        assert!(r.p50 <= r.p99 && r.p99 <= r.max);
        assert_eq!(r.iterations, 20);
    }
}
