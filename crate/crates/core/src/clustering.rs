//! Seeded Lloyd k-means over flattened candidates and cluster medoid
//! extraction.
//!
//! Centroids are internal: callers only ever get indices back, so whatever is
//! selected downstream is one of the input candidates.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::batch::CandidateBatch;
use crate::geometry::{argmin_tied, within_tie, DistanceMatrix};

pub const DEFAULT_MAX_ITERATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("{found} candidates cannot seed {clusters} clusters")]
    InsufficientCandidates { clusters: usize, found: usize },
    #[error("invalid cluster config: {0}")]
    InvalidConfig(&'static str),
    #[error("cluster has no members")]
    EmptyCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterConfig {
    pub num_clusters: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            num_clusters: 2,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: 0,
        }
    }
}

impl ClusterConfig {
    pub fn new(num_clusters: usize, seed: u64) -> Self {
        Self {
            num_clusters,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.num_clusters < 2 {
            return Err(ClusterError::InvalidConfig(
                "num_clusters must be at least 2",
            ));
        }
        if self.max_iterations < 1 {
            return Err(ClusterError::InvalidConfig(
                "max_iterations must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub num_clusters: usize,
    pub iterations_run: usize,
    pub converged: bool,
}

impl ClusterAssignment {
    /// Sorted member indices of `cluster`.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Result of a Lloyd run, including the within-cluster sum of squares after
/// each iteration's centroid update.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub assignment: ClusterAssignment,
    pub inertia: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Draw `num_clusters` distinct candidate indices uniformly without
/// replacement.
pub fn init_centroids<R: Rng + ?Sized>(
    batch: &CandidateBatch,
    config: &ClusterConfig,
    rng: &mut R,
) -> Result<Vec<usize>, ClusterError> {
    config.validate()?;
    if batch.len() < config.num_clusters {
        return Err(ClusterError::InsufficientCandidates {
            clusters: config.num_clusters,
            found: batch.len(),
        });
    }
    Ok(index::sample(rng, batch.len(), config.num_clusters).into_vec())
}

/// k-means seeded from `config.seed`.
pub fn kmeans(
    batch: &CandidateBatch,
    config: &ClusterConfig,
) -> Result<ClusterAssignment, ClusterError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = init_centroids(batch, config, &mut rng)?;
    Ok(lloyd(batch, &init, config.max_iterations).assignment)
}

/// Lloyd iterations starting from the candidates at `initial` as centroids.
///
/// Assignment ties go to the lowest cluster id. A cluster left empty after
/// assignment takes the point farthest from its current centroid (taken only
/// from clusters with more than one member). Stops once labels repeat between
/// successive iterations or after `max_iterations`.
pub fn lloyd(batch: &CandidateBatch, initial: &[usize], max_iterations: usize) -> LloydRun {
    let k = batch.len();
    let c = initial.len();
    assert!(c >= 1 && c <= k, "need 1 <= clusters <= candidates");
    let dim = batch.dim();

    let mut centroids: Vec<Vec<f64>> = initial.iter().map(|&i| batch.vector(i).to_vec()).collect();
    let mut labels: Vec<usize> = Vec::new();
    let mut inertia = Vec::new();
    let mut converged = false;
    let mut iterations_run = 0;

    for _ in 0..max_iterations.max(1) {
        iterations_run += 1;
        let mut next = Vec::with_capacity(k);
        let mut cost = Vec::with_capacity(k);
        for x in batch.vectors() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (id, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(x, centroid);
                if d < best_d {
                    best = id;
                    best_d = d;
                }
            }
            next.push(best);
            cost.push(best_d);
        }

        repair_empty(&mut next, &mut cost, c);

        if next == labels {
            converged = true;
            break;
        }
        labels = next;

        let mut counts = vec![0usize; c];
        let mut sums = vec![vec![0.0; dim]; c];
        for (x, &l) in batch.vectors().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(x) {
                *s += v;
            }
        }
        for ((centroid, sum), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *centroid = sum.into_iter().map(|s| s / n as f64).collect();
            }
        }
        inertia.push(
            batch
                .vectors()
                .zip(&labels)
                .map(|(x, &l)| sq_dist(x, &centroids[l]))
                .sum(),
        );
    }

    LloydRun {
        assignment: ClusterAssignment {
            labels,
            num_clusters: c,
            iterations_run,
            converged,
        },
        inertia,
    }
}

fn repair_empty(labels: &mut [usize], cost: &mut [f64], clusters: usize) {
    let mut sizes = vec![0usize; clusters];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for empty in 0..clusters {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        for i in 0..labels.len() {
            if sizes[labels[i]] > 1 && donor.is_none_or(|d| cost[i] > cost[d]) {
                donor = Some(i);
            }
        }
        // With clusters <= points some cluster always has a spare member.
        let Some(i) = donor else { break };
        sizes[labels[i]] -= 1;
        sizes[empty] += 1;
        labels[i] = empty;
        cost[i] = 0.0;
    }
}

fn within_distance(dm: &DistanceMatrix, members: &[usize]) -> f64 {
    let mut total = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            total += dm.get(i, j);
        }
    }
    total
}

/// The cluster with the most members. Ties prefer the smaller total
/// within-cluster pairwise distance, then the smaller lowest member index.
pub fn largest_cluster(assignment: &ClusterAssignment, dm: &DistanceMatrix) -> usize {
    let sizes = assignment.sizes();
    let max = sizes.iter().copied().max().unwrap_or(0);
    let tied: Vec<(usize, f64)> = (0..sizes.len())
        .filter(|&c| sizes[c] == max && max > 0)
        .map(|c| (c, within_distance(dm, &assignment.members(c))))
        .collect();
    let tightest = tied.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    // Among equally tight clusters, the one holding the lowest index wins.
    tied.iter()
        .filter(|t| within_tie(t.1, tightest))
        .min_by_key(|t| assignment.members(t.0)[0])
        .map_or(0, |t| t.0)
}

/// Member minimizing the summed distance to the other members, read from
/// `dm`. Ties go to the smallest index.
pub fn cluster_medoid(dm: &DistanceMatrix, members: &[usize]) -> Result<usize, ClusterError> {
    if members.is_empty() {
        return Err(ClusterError::EmptyCluster);
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let sums: Vec<f64> = sorted.iter().map(|&i| dm.sum_to(i, &sorted)).collect();
    Ok(sorted[argmin_tied(&sums)])
}
