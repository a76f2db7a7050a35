//! Monte Carlo model of the sample-select-execute loop.
//!
//! Each round draws candidates from a labeled Gaussian mixture, executes one
//! of them according to the policy, and succeeds iff the executed candidate
//! came from a success mode. An episode succeeds iff every round does.

mod model;
mod rollout;
mod scenario;
mod sweep;

pub use model::{draw_candidates, Draw, EpisodeModel, ModeSpec, ModelError, RoundModel};
pub use rollout::{
    estimate_success, run_episode, EpisodeOutcome, Policy, RolloutPlan, RolloutStats, SimError,
};
pub use scenario::{Scenario, ScenarioError, SimulationSpec};
pub use sweep::{ablation_sweep, gain, SweepAxes, SweepRow, SweepTable, TABLE_HEADER};
