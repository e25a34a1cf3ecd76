use super::{ExperimentSpec, MarsScenario, MissionConfig, MvpScenario, PriorKnowledge, ReplayScenario, Scenario};
use crate::planning::{PlannerConfig, PlannerKind};

pub const PRESETS: &[&str] = &["mars-tables-1-2", "mvp-tables-3-4", "mvp-priors-5-6", "mvp-replay"];

fn planner(kind: PlannerKind, iterations: usize) -> PlannerConfig {
    PlannerConfig {
        kind,
        iterations,
        ..PlannerConfig::default()
    }
}

fn mvp_spec(name: &str, scenario: Scenario, kinds: &[PlannerKind], budgets: &[f64], n_maps: usize) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        base: MissionConfig {
            scenario,
            ..MissionConfig::default()
        },
        planners: kinds.iter().map(|&k| planner(k, 50)).collect(),
        budgets: budgets.to_vec(),
        n_maps,
        seed: 2,
        reference: Some("mcts-50".into()),
        ..ExperimentSpec::default()
    }
}

/// Named experiment protocols. Some presets hold several experiments, each
/// written to its own subdirectory.
pub fn preset(name: &str) -> Option<Vec<ExperimentSpec>> {
    use PlannerKind::*;
    let specs = match name {
        "mars-tables-1-2" => vec![ExperimentSpec {
            name: name.into(),
            base: MissionConfig {
                scenario: Scenario::Mars(MarsScenario::default()),
                ..MissionConfig::default()
            },
            planners: [Random, Fixed, Greedy, Mcts].iter().map(|&k| planner(k, 100)).collect(),
            budgets: vec![50.0, 75.0, 100.0],
            n_maps: 50,
            seed: 1,
            reference: Some("mcts-100".into()),
            ..ExperimentSpec::default()
        }],
        "mvp-tables-3-4" => vec![mvp_spec(
            name,
            Scenario::Mvp(MvpScenario::default()),
            &[Greedy, Random, Lawnmower, Mcts],
            &[60.0, 80.0, 100.0, 120.0, 140.0],
            50,
        )],
        "mvp-priors-5-6" => [
            ("experiment-1", PriorKnowledge::TerrainHint { p: 0.5 }),
            ("experiment-2", PriorKnowledge::Mapping { terrain: 0, boost: 8.0 }),
        ]
        .into_iter()
        .map(|(n, prior)| {
            let s = Scenario::Mvp(MvpScenario {
                prior,
                ..MvpScenario::default()
            });
            mvp_spec(n, s, &[Lawnmower, Mcts], &[140.0], 50)
        })
        .collect(),
        "mvp-replay" => [("nss-2", 2.0), ("nss-5", 5.0)]
            .into_iter()
            .map(|(n, nss_cost)| {
                let s = Scenario::Replay(ReplayScenario {
                    nss_cost,
                    ..ReplayScenario::default()
                });
                mvp_spec(n, s, &[Lawnmower, Mcts], &[40.0], 20)
            })
            .collect(),
        _ => return None,
    };
    Some(specs)
}
