//! End-to-end consensus selection: unimodality guard first, then the medoid
//! of the largest k-means cluster.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{validate_batch, BatchError, CandidateBatch};
use crate::clustering::{
    self, ClusterAssignment, ClusterConfig, ClusterError, DEFAULT_MAX_ITERATIONS,
};
use crate::geometry::{self, GeometryError, Metric};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("invalid batch: {0}")]
    Batch(#[from] BatchError),
    #[error("invalid selector config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    /// Candidates drawn per round (K).
    pub samples: usize,
    pub num_clusters: usize,
    pub tau: f64,
    pub eps: f64,
    pub metric: Metric,
    pub seed: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            samples: 16,
            num_clusters: 2,
            tau: 0.3,
            eps: 1e-8,
            metric: Metric::Euclidean,
            seed: 0,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), SelectError> {
        let bad = |msg: &str| Err(SelectError::Config(msg.to_string()));
        if self.samples < 1 {
            return bad("samples must be at least 1");
        }
        if self.num_clusters < 2 {
            return bad("num_clusters must be at least 2");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive and finite");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive and finite");
        }
        Ok(())
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            num_clusters: self.num_clusters,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: self.seed,
        }
    }
}

/// Which branch of the pipeline produced the selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPath {
    SingleCandidate,
    Unimodal,
    Clustered,
    /// Guard failed but there were fewer candidates than clusters.
    GlobalMedoidFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub selected_index: usize,
    pub guard_score: f64,
    pub unimodal: bool,
    pub global_medoid: usize,
    /// Empty unless the clustering branch ran.
    pub cluster_sizes: Vec<usize>,
    pub assignment: Option<ClusterAssignment>,
    pub selected_cluster: Option<usize>,
    pub path: SelectionPath,
}

pub fn select(
    batch: &CandidateBatch,
    config: &SelectorConfig,
) -> Result<SelectionResult, SelectError> {
    config.validate()?;
    if batch.len() == 1 {
        return Ok(SelectionResult {
            selected_index: 0,
            guard_score: 0.0,
            unimodal: true,
            global_medoid: 0,
            cluster_sizes: Vec::new(),
            assignment: None,
            selected_cluster: None,
            path: SelectionPath::SingleCandidate,
        });
    }

    let dm = geometry::pairwise_distances(batch, config.metric);
    let guard = geometry::unimodality_score(batch, &dm, config.eps)?;
    let mut result = SelectionResult {
        selected_index: guard.medoid,
        guard_score: guard.score,
        unimodal: true,
        global_medoid: guard.medoid,
        cluster_sizes: Vec::new(),
        assignment: None,
        selected_cluster: None,
        path: SelectionPath::Unimodal,
    };
    if guard.score < config.tau {
        return Ok(result);
    }

    result.unimodal = false;
    if batch.len() < config.num_clusters {
        result.path = SelectionPath::GlobalMedoidFallback;
        return Ok(result);
    }

    let assignment = clustering::kmeans(batch, &config.cluster_config())?;
    let cluster = clustering::largest_cluster(&assignment, &dm);
    result.selected_index = clustering::cluster_medoid(&dm, &assignment.members(cluster))?;
    result.cluster_sizes = assignment.sizes();
    result.selected_cluster = Some(cluster);
    result.assignment = Some(assignment);
    result.path = SelectionPath::Clustered;
    Ok(result)
}

/// Validate a raw `K x T x A` array, then select.
pub fn select_raw<C, R>(
    raw: &[C],
    config: &SelectorConfig,
) -> Result<(CandidateBatch, SelectionResult), SelectError>
where
    C: AsRef<[R]>,
    R: AsRef<[f64]>,
{
    let batch = validate_batch(raw)?;
    let result = select(&batch, config)?;
    Ok((batch, result))
}
