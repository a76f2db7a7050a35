//! Brute-force reference computations.
//!
//! Everything here is written from the definitions, on plain `Vec<f64>`
//! points, without touching `consensus-core`. The tests in that crate compare
//! its optimized paths against these.

use std::fmt;

/// Outcome of comparing an oracle value with the value under test.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub case_id: String,
    pub oracle: f64,
    pub candidate: f64,
    pub matched: bool,
    pub tolerance: f64,
}

impl OracleReport {
    /// Compare within an absolute tolerance. A tolerance of zero demands exact
    /// equality, which is what index comparisons use.
    pub fn compare(
        case_id: impl Into<String>,
        oracle: f64,
        candidate: f64,
        tolerance: f64,
    ) -> Self {
        let matched = if tolerance == 0.0 {
            oracle == candidate
        } else {
            (oracle - candidate).abs() <= tolerance
        };
        Self {
            case_id: case_id.into(),
            oracle,
            candidate,
            matched,
            tolerance,
        }
    }

    pub fn indices(case_id: impl Into<String>, oracle: usize, candidate: usize) -> Self {
        Self::compare(case_id, oracle as f64, candidate as f64, 0.0)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: oracle={} candidate={} tol={}",
            if self.matched { "ok" } else { "MISMATCH" },
            self.case_id,
            self.oracle,
            self.candidate,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    OutOfRange { k: usize, min: usize, max: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::OutOfRange { k, min, max } => {
                write!(f, "oracle supports {min} <= K <= {max}, got K = {k}")
            }
        }
    }
}

impl std::error::Error for OracleError {}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc.sqrt()
}

/// Sums within this relative band of the minimum count as tied, so that
/// values equal in exact arithmetic but a few ulps apart resolve by index.
pub const TIE_RTOL: f64 = 1e-12;

fn first_near_min(sums: &[(usize, f64)]) -> usize {
    let mut min = f64::INFINITY;
    for &(_, s) in sums {
        if s < min {
            min = s;
        }
    }
    let mut best = usize::MAX;
    for &(i, s) in sums {
        if s <= min + TIE_RTOL * min.abs() && i < best {
            best = i;
        }
    }
    best
}

/// Index minimizing the sum of euclidean distances to every point, by a plain
/// double loop. Ties go to the smallest index.
pub fn brute_medoid(points: &[Vec<f64>]) -> usize {
    assert!(!points.is_empty(), "brute_medoid needs at least one point");
    let all: Vec<usize> = (0..points.len()).collect();
    brute_subset_medoid(points, &all)
}

/// Same as [`brute_medoid`] but restricted to `members`.
pub fn brute_subset_medoid(points: &[Vec<f64>], members: &[usize]) -> usize {
    assert!(!members.is_empty());
    let mut sums = Vec::with_capacity(members.len());
    for &i in members {
        let mut sum = 0.0;
        for &j in members {
            sum += euclid(&points[i], &points[j]);
        }
        sums.push((i, sum));
    }
    first_near_min(&sums)
}

/// Median of a multiset by sorting; even counts average the middle pair.
pub fn sorted_median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sum of squared deviations from each group's mean.
pub fn within_sum_of_squares(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let groups = labels.iter().copied().max().map_or(0, |m| m + 1);
    let dim = points.first().map_or(0, |p| p.len());
    let mut total = 0.0;
    for g in 0..groups {
        let members: Vec<&Vec<f64>> = points
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == g)
            .map(|(p, _)| p)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut mean = vec![0.0; dim];
        for p in &members {
            for d in 0..dim {
                mean[d] += p[d];
            }
        }
        for m in mean.iter_mut() {
            *m /= members.len() as f64;
        }
        for p in &members {
            for d in 0..dim {
                let e = p[d] - mean[d];
                total += e * e;
            }
        }
    }
    total
}

/// Best split of the points into two nonempty groups.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPartition {
    /// Group id per point; point 0 is always in group 0.
    pub labels: Vec<usize>,
    pub objective: f64,
}

impl TwoPartition {
    /// Group memberships as sorted index lists, the group holding point 0 first.
    pub fn groups(&self) -> (Vec<usize>, Vec<usize>) {
        let a = (0..self.labels.len())
            .filter(|&i| self.labels[i] == 0)
            .collect();
        let b = (0..self.labels.len())
            .filter(|&i| self.labels[i] == 1)
            .collect();
        (a, b)
    }
}

pub const MAX_PARTITION_K: usize = 14;

/// Exhaustively enumerate the 2^(K-1) - 1 two-way splits and keep the one with
/// the smallest within-group sum of squares. First minimum wins.
pub fn best_two_partition(points: &[Vec<f64>]) -> Result<TwoPartition, OracleError> {
    let k = points.len();
    if !(2..=MAX_PARTITION_K).contains(&k) {
        return Err(OracleError::OutOfRange {
            k,
            min: 2,
            max: MAX_PARTITION_K,
        });
    }
    let mut best: Option<TwoPartition> = None;
    // Point 0 stays in group 0; bits 0..k-1 of `mask` place points 1..k.
    for mask in 1u32..(1u32 << (k - 1)) {
        let labels: Vec<usize> = (0..k)
            .map(|i| usize::from(i > 0 && mask & (1 << (i - 1)) != 0))
            .collect();
        let objective = within_sum_of_squares(points, &labels);
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(TwoPartition { labels, objective });
        }
    }
    Ok(best.expect("k >= 2 yields at least one split"))
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    // C(n, k) built multiplicatively to stay exact for small n.
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// P(X >= m) for X ~ Binomial(n, p), by direct term summation.
pub fn binomial_at_least(n: usize, m: usize, p: f64) -> f64 {
    (m..=n).map(|k| binomial_pmf(n, k, p)).sum()
}

/// Probability that a strict majority of `k` independent draws succeed.
pub fn binomial_majority(k: usize, p: f64) -> f64 {
    assert!(k >= 1);
    assert!((0.0..=1.0).contains(&p));
    binomial_at_least(k, k / 2 + 1, p)
}

/// Episode success as the product of per-round success probabilities.
pub fn episode_closed_form(per_round_success: &[f64]) -> f64 {
    per_round_success.iter().product()
}
