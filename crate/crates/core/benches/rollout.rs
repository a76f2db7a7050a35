//! Sequential against data-parallel episode execution. Without the
//! `parallel` feature both rows run on one thread.

use consensus_core::simulator::{
    estimate_success, EpisodeModel, ModeSpec, Policy, RolloutPlan, RoundModel,
};
use consensus_core::{Execution, SelectorConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn episode(dim: usize) -> EpisodeModel {
    let round = RoundModel::new(
        vec![
            ModeSpec::new(vec![0.0; dim], 0.05, 0.7, true),
            ModeSpec::new(vec![3.0; dim], 0.02, 0.3, false),
        ],
        1,
    )
    .unwrap();
    EpisodeModel::repeated("bench", round, 10).unwrap()
}

fn rollout(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_success");
    group.sample_size(10);
    let policies = [
        ("single_sample", Policy::SingleSample),
        ("consensus", Policy::Consensus(SelectorConfig::default())),
    ];
    for dim in [8, 64] {
        let ep = episode(dim);
        for (name, policy) in &policies {
            for (mode, execution) in [
                ("sequential", Execution::Sequential),
                ("parallel", Execution::Parallel),
            ] {
                let plan = RolloutPlan::new(500, 2, 7).with_execution(execution);
                group.bench_function(BenchmarkId::new(format!("{name}/{mode}"), dim), |b| {
                    b.iter(|| estimate_success(&ep, policy, &plan).unwrap())
                });
            }
        }
    }
    group.finish();
}

criterion_group!(benches, rollout);
criterion_main!(benches);
