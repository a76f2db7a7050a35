use thiserror::Error;

use super::model::{draw_candidates, EpisodeModel, ModelError};
use crate::exec::Execution;
use crate::seed;
use crate::selector::{select, SelectError, SelectorConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error("invalid rollout plan: {0}")]
    Plan(&'static str),
}

/// How the executed chunk is chosen each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Draw one candidate and execute it.
    SingleSample,
    /// Draw `config.samples` candidates and execute the consensus selection.
    Consensus(SelectorConfig),
}

impl Policy {
    pub fn samples(&self) -> usize {
        match self {
            Policy::SingleSample => 1,
            Policy::Consensus(cfg) => cfg.samples,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::SingleSample => "single_sample",
            Policy::Consensus(_) => "consensus",
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if let Policy::Consensus(cfg) = self {
            cfg.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeOutcome {
    pub success: bool,
    pub rounds_succeeded: usize,
    pub rounds: usize,
}

/// Play every round of `episode`. The episode succeeds only if every executed
/// chunk came from a success mode. All rounds run even after a failure so that
/// round-level rates are unbiased.
///
/// Round `t` draws from the stream `(episode_seed, t)`; the k-means seed for
/// that round is derived from `(config.seed, episode_seed, t)`.
pub fn run_episode(
    episode: &EpisodeModel,
    policy: &Policy,
    episode_seed: u64,
) -> Result<EpisodeOutcome, SimError> {
    let mut rounds_succeeded = 0;
    for (t, round) in episode.rounds().iter().enumerate() {
        let mut rng = seed::stream(episode_seed, &[t as u64]);
        let draw = draw_candidates(round, policy.samples(), &mut rng);
        let executed = match policy {
            Policy::SingleSample => 0,
            Policy::Consensus(cfg) => {
                let cfg = SelectorConfig {
                    seed: seed::derive(cfg.seed, &[episode_seed, t as u64]),
                    ..*cfg
                };
                select(&draw.batch, &cfg)?.selected_index
            }
        };
        if draw.labels[executed] {
            rounds_succeeded += 1;
        }
    }
    Ok(EpisodeOutcome {
        success: rounds_succeeded == episode.horizon(),
        rounds_succeeded,
        rounds: episode.horizon(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RolloutPlan {
    pub episodes_per_repeat: usize,
    pub repeats: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl RolloutPlan {
    pub fn new(episodes_per_repeat: usize, repeats: usize, seed: u64) -> Self {
        Self {
            episodes_per_repeat,
            repeats,
            seed,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Self { execution, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStats {
    /// Mean of the per-repeat episode success rates.
    pub mean_success: f64,
    /// Sample standard deviation (n - 1) of the per-repeat rates; 0 for one repeat.
    pub std_success: f64,
    pub repeats: usize,
    pub episodes_per_repeat: usize,
    /// Fraction of all executed rounds whose chunk came from a success mode.
    pub round_success: f64,
    pub repeat_rates: Vec<f64>,
}

/// Monte Carlo estimate of episode success. Episode `e` of repeat `r` uses the
/// seed derived from `(plan.seed, r, e)`, so results do not depend on
/// execution order or on the execution mode.
pub fn estimate_success(
    episode: &EpisodeModel,
    policy: &Policy,
    plan: &RolloutPlan,
) -> Result<RolloutStats, SimError> {
    if plan.episodes_per_repeat == 0 {
        return Err(SimError::Plan("episodes_per_repeat must be at least 1"));
    }
    if plan.repeats == 0 {
        return Err(SimError::Plan("repeats must be at least 1"));
    }
    policy.validate()?;

    let n = plan.episodes_per_repeat;
    let outcomes = plan.execution.map_range(n * plan.repeats, |i| {
        let (r, e) = (i / n, i % n);
        run_episode(
            episode,
            policy,
            seed::derive(plan.seed, &[r as u64, e as u64]),
        )
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let repeat_rates: Vec<f64> = outcomes
        .chunks(n)
        .map(|rep| rep.iter().filter(|o| o.success).count() as f64 / n as f64)
        .collect();
    let rounds_ok: usize = outcomes.iter().map(|o| o.rounds_succeeded).sum();
    let rounds_total: usize = outcomes.iter().map(|o| o.rounds).sum();

    let (mean_success, std_success) = mean_std(&repeat_rates);
    Ok(RolloutStats {
        mean_success,
        std_success,
        repeats: plan.repeats,
        episodes_per_repeat: n,
        round_success: rounds_ok as f64 / rounds_total as f64,
        repeat_rates,
    })
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
