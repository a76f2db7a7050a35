//! TOML scenario files.
//!
//! ```toml
//! name = "planted"
//! dimension = 8      # flattened chunk length D
//! horizon = 10       # rounds per episode T
//! chunk_steps = 1    # optional, D must divide evenly
//!
//! # One [[rounds]] entry reused for every round, or exactly `horizon` entries.
//! [[rounds]]
//! [[rounds.modes]]
//! center = 0.0       # scalar broadcast to D, or a full list
//! spread = 0.05
//! weight = 0.7
//! success = true
//!
//! [[rounds.modes]]
//! center = 5.0
//! spread = 0.01
//! weight = 0.3
//! success = false
//!
//! [policy]           # selector defaults
//! samples = 16
//! num_clusters = 2
//!
//! [simulation]
//! episodes = 2000
//! repeats = 5
//! seed = 7
//!
//! [sweep]
//! metrics = ["euclidean", "cosine"]
//! k_values = [16, 32]
//! c_values = [2, 4]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::model::{EpisodeModel, ModeSpec, ModelError, RoundModel};
use super::sweep::SweepAxes;
use crate::selector::SelectorConfig;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("round {round}: {source}")]
    Model {
        round: usize,
        #[source]
        source: ModelError,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CenterSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeEntry {
    center: CenterSpec,
    spread: f64,
    weight: f64,
    success: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoundEntry {
    modes: Vec<ModeEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub episodes: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            episodes: 1000,
            repeats: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: Option<String>,
    dimension: usize,
    horizon: usize,
    #[serde(default)]
    chunk_steps: Option<usize>,
    rounds: Vec<RoundEntry>,
    #[serde(default)]
    policy: Option<SelectorConfig>,
    #[serde(default)]
    simulation: Option<SimulationSpec>,
    #[serde(default)]
    sweep: Option<SweepAxes>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub episode: EpisodeModel,
    pub policy: SelectorConfig,
    pub simulation: SimulationSpec,
    pub sweep: SweepAxes,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text)?;
        if file.dimension == 0 {
            return Err(ScenarioError::Invalid(
                "dimension must be at least 1".into(),
            ));
        }
        if file.horizon == 0 {
            return Err(ScenarioError::Invalid("horizon must be at least 1".into()));
        }
        if file.rounds.len() != 1 && file.rounds.len() != file.horizon {
            return Err(ScenarioError::Invalid(format!(
                "expected 1 or {} rounds entries, found {}",
                file.horizon,
                file.rounds.len()
            )));
        }
        let chunk_steps = file.chunk_steps.unwrap_or(1);
        let mut rounds = Vec::with_capacity(file.rounds.len());
        for (round, entry) in file.rounds.into_iter().enumerate() {
            let modes = entry
                .modes
                .into_iter()
                .map(|m| ModeSpec {
                    center: match m.center {
                        CenterSpec::Scalar(v) => vec![v; file.dimension],
                        CenterSpec::Vector(v) => v,
                    },
                    spread: m.spread,
                    weight: m.weight,
                    success: m.success,
                })
                .collect();
            let model = RoundModel::new(modes, chunk_steps)
                .map_err(|source| ScenarioError::Model { round, source })?;
            if model.dimension() != file.dimension {
                return Err(ScenarioError::Invalid(format!(
                    "round {round}: centers have length {}, dimension is {}",
                    model.dimension(),
                    file.dimension
                )));
            }
            rounds.push(model);
        }
        if rounds.len() == 1 {
            rounds = vec![rounds.remove(0); file.horizon];
        }
        let name = file.name.unwrap_or_else(|| "scenario".to_string());
        let episode = EpisodeModel::new(name, rounds)
            .map_err(|source| ScenarioError::Model { round: 0, source })?;
        let policy = file.policy.unwrap_or_default();
        policy
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(Self {
            episode,
            policy,
            simulation: file.simulation.unwrap_or_default(),
            sweep: file.sweep.unwrap_or_default(),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Metric;

    const DOC: &str = r#"
name = "planted"
dimension = 4
horizon = 3

[[rounds]]
[[rounds.modes]]
center = 0.0
spread = 0.05
weight = 0.7
success = true

[[rounds.modes]]
center = [5.0, 5.0, 5.0, 6.0]
spread = 0.01
weight = 0.3
success = false

[policy]
samples = 8
metric = "cosine"

[simulation]
episodes = 10
repeats = 2
seed = 3

[sweep]
k_values = [4, 8]
"#;

    #[test]
    fn parses_full_document() {
        let s = Scenario::from_toml_str(DOC).unwrap();
        assert_eq!(s.episode.name(), "planted");
        assert_eq!(s.episode.horizon(), 3);
        let modes = s.episode.rounds()[2].modes();
        assert_eq!(modes[0].center, vec![0.0; 4]);
        assert_eq!(modes[1].center, vec![5.0, 5.0, 5.0, 6.0]);
        assert_eq!(s.policy.samples, 8);
        assert_eq!(s.policy.metric, Metric::Cosine);
        assert_eq!(s.policy.tau, 0.3);
        assert_eq!(
            s.simulation,
            SimulationSpec {
                episodes: 10,
                repeats: 2,
                seed: 3
            }
        );
        assert_eq!(s.sweep.k_values, vec![4, 8]);
        assert!(s.sweep.metrics.is_empty());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(
            Scenario::from_toml_str(&DOC.replace("weight = 0.3", "weight = 0.2")),
            Err(ScenarioError::Model { round: 0, .. })
        ));
        assert!(matches!(
            Scenario::from_toml_str(&DOC.replace("horizon = 3", "horizon = 0")),
            Err(ScenarioError::Invalid(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str(&DOC.replace("spread = 0.05", "sprad = 0.05")),
            Err(ScenarioError::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str(&DOC.replace("dimension = 4", "dimension = 5")),
            Err(ScenarioError::Model { .. } | ScenarioError::Invalid(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str(&DOC.replace("samples = 8", "samples = 8\ntau = -1.0")),
            Err(ScenarioError::Invalid(_))
        ));
        assert!(matches!(
            Scenario::from_path("/nonexistent/scenario.toml"),
            Err(ScenarioError::Io { .. })
        ));
    }
}
