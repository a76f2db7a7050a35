//! Pairwise distances, medoids and the unimodality guard.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::CandidateBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => euclidean(a, b),
            Metric::Cosine => cosine_distance(a, b),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "cosine" | "cos" => Ok(Metric::Cosine),
            other => Err(format!(
                "unknown metric `{other}` (expected euclidean or cosine)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("need at least {needed} candidates, got {found}")]
    Degenerate { needed: usize, found: usize },
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `1 - cos(a, b)`. A zero vector counts as orthogonal to every nonzero
/// vector and identical to another zero vector.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    cosine_with_norms(a, b, norm(a), norm(b))
}

fn cosine_with_norms(a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    match (na == 0.0, nb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        (false, false) => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            // Rounding can push |cos| slightly past 1.
            (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
        }
    }
}

/// Symmetric K x K distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    metric: Metric,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.size).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Entries strictly above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.size * self.size.saturating_sub(1) / 2);
        for i in 0..self.size {
            out.extend_from_slice(&self.row(i)[i + 1..]);
        }
        out
    }

    /// Sum of distances from `i` to each index in `members` (ascending order).
    pub fn sum_to(&self, i: usize, members: &[usize]) -> f64 {
        let row = self.row(i);
        members.iter().map(|&j| row[j]).sum()
    }
}

pub fn pairwise_distances(batch: &CandidateBatch, metric: Metric) -> DistanceMatrix {
    let k = batch.len();
    let mut entries = vec![0.0; k * k];
    let norms: Vec<f64> = match metric {
        Metric::Cosine => batch.vectors().map(norm).collect(),
        Metric::Euclidean => Vec::new(),
    };
    for i in 0..k {
        let xi = batch.vector(i);
        for j in i + 1..k {
            let xj = batch.vector(j);
            let d = match metric {
                Metric::Euclidean => euclidean(xi, xj),
                Metric::Cosine => cosine_with_norms(xi, xj, norms[i], norms[j]),
            };
            entries[i * k + j] = d;
            entries[j * k + i] = d;
        }
    }
    DistanceMatrix {
        size: k,
        metric,
        entries,
    }
}

/// Relative band within which two distance sums count as tied. Sums that are
/// equal in exact arithmetic can differ by a few ulps after rounding.
pub const TIE_RTOL: f64 = 1e-12;

/// Whether `value` ties with or beats `min` under [`TIE_RTOL`].
pub fn within_tie(value: f64, min: f64) -> bool {
    value <= min + TIE_RTOL * min.abs()
}

/// First position whose value ties with the minimum.
pub fn argmin_tied(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| within_tie(v, min)).unwrap_or(0)
}

/// Index with the smallest row sum; the first one on ties.
pub fn global_medoid(dm: &DistanceMatrix) -> usize {
    argmin_tied(&dm.row_sums())
}

/// Median of the strict upper triangle. Even counts average the two middle
/// values.
pub fn median_pairwise(dm: &DistanceMatrix) -> Result<f64, GeometryError> {
    if dm.size() < 2 {
        return Err(GeometryError::Degenerate {
            needed: 2,
            found: dm.size(),
        });
    }
    let mut values = dm.upper_triangle();
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        Ok(upper)
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lower + upper) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardScore {
    pub score: f64,
    pub medoid: usize,
}

/// Distance from the batch mean to the global medoid, relative to the median
/// pairwise distance. The numerator is always euclidean; the medoid and the
/// denominator follow the matrix metric.
pub fn unimodality_score(
    batch: &CandidateBatch,
    dm: &DistanceMatrix,
    eps: f64,
) -> Result<GuardScore, GeometryError> {
    let median = median_pairwise(dm)?;
    let medoid = global_medoid(dm);
    let offset = euclidean(&batch.mean(), batch.vector(medoid));
    Ok(GuardScore {
        score: offset / (median + eps),
        medoid,
    })
}
