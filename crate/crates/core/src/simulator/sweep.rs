use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::model::EpisodeModel;
use super::rollout::{estimate_success, Policy, RolloutPlan, RolloutStats, SimError};
use crate::geometry::Metric;
use crate::selector::SelectorConfig;

/// Values to try for each selector knob. Each axis is varied on its own with
/// every other knob held at the base config.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub metrics: Vec<Metric>,
    pub k_values: Vec<usize>,
    pub c_values: Vec<usize>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty() && self.k_values.is_empty() && self.c_values.is_empty()
    }

    /// `(config_id, config)` pairs in metric, K, C order.
    pub fn configurations(&self, base: &SelectorConfig) -> Vec<(String, SelectorConfig)> {
        if self.is_empty() {
            return vec![("base".to_string(), *base)];
        }
        let mut out = Vec::new();
        for &metric in &self.metrics {
            out.push((
                format!("metric={metric}"),
                SelectorConfig { metric, ..*base },
            ));
        }
        for &samples in &self.k_values {
            out.push((format!("K={samples}"), SelectorConfig { samples, ..*base }));
        }
        for &num_clusters in &self.c_values {
            out.push((
                format!("C={num_clusters}"),
                SelectorConfig {
                    num_clusters,
                    ..*base
                },
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config_id: String,
    pub policy: Policy,
    pub stats: RolloutStats,
}

impl SweepRow {
    fn config(&self) -> SelectorConfig {
        match self.policy {
            Policy::Consensus(cfg) => cfg,
            Policy::SingleSample => SelectorConfig {
                samples: 1,
                ..SelectorConfig::default()
            },
        }
    }
}

pub const TABLE_HEADER: &str = "config_id,metric,K,C,tau,mean,std";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn row(&self, config_id: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.config_id == config_id)
    }

    /// Header plus one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TABLE_HEADER);
        out.push('\n');
        for row in &self.rows {
            let cfg = row.config();
            writeln!(
                out,
                "{},{},{},{},{:?},{:?},{:?}",
                row.config_id,
                cfg.metric,
                cfg.samples,
                cfg.num_clusters,
                cfg.tau,
                row.stats.mean_success,
                row.stats.std_success
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Gain of `row` over `baseline` in mean success, with the combined
/// across-repeat standard deviation of the two estimates.
pub fn gain(row: &RolloutStats, baseline: &RolloutStats) -> (f64, f64) {
    (
        row.mean_success - baseline.mean_success,
        row.std_success.hypot(baseline.std_success),
    )
}

/// One `estimate_success` run per configuration, every run using the same
/// plan (and so the same master seed). With `include_baseline`, a
/// `single_sample` row comes first.
pub fn ablation_sweep(
    episode: &EpisodeModel,
    base: &SelectorConfig,
    axes: &SweepAxes,
    plan: &RolloutPlan,
    include_baseline: bool,
) -> Result<SweepTable, SimError> {
    let mut rows = Vec::new();
    if include_baseline {
        rows.push(SweepRow {
            config_id: "single_sample".to_string(),
            policy: Policy::SingleSample,
            stats: estimate_success(episode, &Policy::SingleSample, plan)?,
        });
    }
    for (config_id, cfg) in axes.configurations(base) {
        let policy = Policy::Consensus(cfg);
        let stats = estimate_success(episode, &policy, plan)?;
        rows.push(SweepRow {
            config_id,
            policy,
            stats,
        });
    }
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::model::{ModeSpec, RoundModel};

    fn episode() -> EpisodeModel {
        let round = RoundModel::new(
            vec![
                ModeSpec::new(vec![0.0; 3], 0.05, 0.8, true),
                ModeSpec::new(vec![6.0; 3], 0.01, 0.2, false),
            ],
            1,
        )
        .unwrap();
        EpisodeModel::repeated("sweep", round, 3).unwrap()
    }

    #[test]
    fn empty_axes_single_base_row() {
        let t = ablation_sweep(
            &episode(),
            &SelectorConfig::default(),
            &SweepAxes::default(),
            &RolloutPlan::new(20, 2, 1),
            false,
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].config_id, "base");
    }

    #[test]
    fn one_row_per_value() {
        let axes = SweepAxes {
            k_values: vec![1, 4, 8, 16],
            ..Default::default()
        };
        let t = ablation_sweep(
            &episode(),
            &SelectorConfig::default(),
            &axes,
            &RolloutPlan::new(50, 2, 1),
            true,
        )
        .unwrap();
        assert_eq!(t.rows.len(), 5);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TABLE_HEADER));
        assert!(lines
            .next()
            .unwrap()
            .starts_with("single_sample,euclidean,1,2,0.3,"));
        assert!(lines.next().unwrap().starts_with("K=1,euclidean,1,2,0.3,"));
        // K=1 consensus executes the only draw, same as single sample.
        assert_eq!(t.rows[0].stats, t.rows[1].stats);
    }

    #[test]
    fn configurations_vary_one_knob() {
        let axes = SweepAxes {
            metrics: vec![Metric::Cosine],
            k_values: vec![32],
            c_values: vec![4],
        };
        let base = SelectorConfig::default();
        let cfgs = axes.configurations(&base);
        let ids: Vec<_> = cfgs.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["metric=cosine", "K=32", "C=4"]);
        assert_eq!(
            cfgs[0].1,
            SelectorConfig {
                metric: Metric::Cosine,
                ..base
            }
        );
        assert_eq!(
            cfgs[1].1,
            SelectorConfig {
                samples: 32,
                ..base
            }
        );
        assert_eq!(
            cfgs[2].1,
            SelectorConfig {
                num_clusters: 4,
                ..base
            }
        );
    }

    #[test]
    fn gain_combines_std() {
        let mk = |m, s| RolloutStats {
            mean_success: m,
            std_success: s,
            repeats: 2,
            episodes_per_repeat: 1,
            round_success: m,
            repeat_rates: vec![],
        };
        let (g, s) = gain(&mk(0.9, 0.03), &mk(0.5, 0.04));
        assert!((g - 0.4).abs() < 1e-12);
        assert!((s - 0.05).abs() < 1e-12);
    }
}
