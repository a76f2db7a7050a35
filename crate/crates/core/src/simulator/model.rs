use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::CandidateBatch;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("round has no modes")]
    NoModes,
    #[error("round has no success mode")]
    NoSuccessMode,
    #[error("mode {mode}: weight {weight} outside (0, 1]")]
    Weight { mode: usize, weight: f64 },
    #[error("mode weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("mode {mode}: spread must be finite and nonnegative")]
    Spread { mode: usize },
    #[error("mode {mode}: center has length {found}, expected {expected}")]
    CenterLength {
        mode: usize,
        expected: usize,
        found: usize,
    },
    #[error("mode {mode}: center has a non-finite value")]
    NonFiniteCenter { mode: usize },
    #[error("dimension {dimension} is not divisible into {steps} chunk steps")]
    ChunkSteps { dimension: usize, steps: usize },
    #[error("episode has no rounds")]
    EmptyEpisode,
}

/// One isotropic Gaussian component of a round's candidate distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub center: Vec<f64>,
    /// Per-coordinate standard deviation.
    pub spread: f64,
    pub weight: f64,
    pub success: bool,
}

impl ModeSpec {
    pub fn new(center: Vec<f64>, spread: f64, weight: f64, success: bool) -> Self {
        Self {
            center,
            spread,
            weight,
            success,
        }
    }
}

/// Labeled mixture standing in for the policy's candidate distribution in one
/// context.
#[derive(Debug, Clone)]
pub struct RoundModel {
    modes: Vec<ModeSpec>,
    chunk_steps: usize,
    dimension: usize,
    picker: WeightedIndex<f64>,
}

impl PartialEq for RoundModel {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes && self.chunk_steps == other.chunk_steps
    }
}

impl RoundModel {
    /// `chunk_steps` splits the flattened dimension into chunk rows; use 1 when
    /// the row structure does not matter.
    pub fn new(modes: Vec<ModeSpec>, chunk_steps: usize) -> Result<Self, ModelError> {
        let dimension = modes.first().ok_or(ModelError::NoModes)?.center.len();
        if chunk_steps == 0 || dimension == 0 || dimension % chunk_steps != 0 {
            return Err(ModelError::ChunkSteps {
                dimension,
                steps: chunk_steps,
            });
        }
        for (mode, m) in modes.iter().enumerate() {
            if !(m.weight > 0.0 && m.weight <= 1.0) {
                return Err(ModelError::Weight {
                    mode,
                    weight: m.weight,
                });
            }
            if !(m.spread >= 0.0 && m.spread.is_finite()) {
                return Err(ModelError::Spread { mode });
            }
            if m.center.len() != dimension {
                return Err(ModelError::CenterLength {
                    mode,
                    expected: dimension,
                    found: m.center.len(),
                });
            }
            if m.center.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteCenter { mode });
            }
        }
        let sum: f64 = modes.iter().map(|m| m.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(ModelError::WeightSum { sum });
        }
        if !modes.iter().any(|m| m.success) {
            return Err(ModelError::NoSuccessMode);
        }
        let picker = WeightedIndex::new(modes.iter().map(|m| m.weight))
            .map_err(|_| ModelError::WeightSum { sum })?;
        Ok(Self {
            modes,
            chunk_steps,
            dimension,
            picker,
        })
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn chunk_shape(&self) -> (usize, usize) {
        (self.chunk_steps, self.dimension / self.chunk_steps)
    }

    /// Probability that a single draw comes from a success mode.
    pub fn success_probability(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.success)
            .map(|m| m.weight)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeModel {
    name: String,
    rounds: Vec<RoundModel>,
}

impl EpisodeModel {
    pub fn new(name: impl Into<String>, rounds: Vec<RoundModel>) -> Result<Self, ModelError> {
        if rounds.is_empty() {
            return Err(ModelError::EmptyEpisode);
        }
        Ok(Self {
            name: name.into(),
            rounds,
        })
    }

    /// The same round model for every one of `horizon` rounds.
    pub fn repeated(
        name: impl Into<String>,
        round: RoundModel,
        horizon: usize,
    ) -> Result<Self, ModelError> {
        Self::new(name, vec![round; horizon])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rounds(&self) -> &[RoundModel] {
        &self.rounds
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn per_round_success(&self) -> Vec<f64> {
        self.rounds
            .iter()
            .map(RoundModel::success_probability)
            .collect()
    }
}

/// K candidates drawn for one round, with the success flag of each
/// candidate's generating mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub batch: CandidateBatch,
    pub labels: Vec<bool>,
}

/// Each candidate picks a mode by weight, then samples
/// `center + spread * z` with `z` standard normal per coordinate.
pub fn draw_candidates<R: Rng + ?Sized>(round: &RoundModel, k: usize, rng: &mut R) -> Draw {
    assert!(k >= 1, "need at least one candidate");
    let mut vectors = Vec::with_capacity(k);
    let mut labels = Vec::with_capacity(k);
    for _ in 0..k {
        let mode = &round.modes[round.picker.sample(rng)];
        let v: Vec<f64> = mode
            .center
            .iter()
            .map(|&c| {
                let z: f64 = rng.sample(StandardNormal);
                c + mode.spread * z
            })
            .collect();
        vectors.push(v);
        labels.push(mode.success);
    }
    let (steps, dims) = round.chunk_shape();
    let batch = CandidateBatch::from_flat(steps, dims, vectors)
        .expect("mixture draws are finite and share a shape");
    Draw { batch, labels }
}
