use super::{feasible_actions, sensing_pose, Action, ChildStat, Domain, PlanError, PlannerConfig};
use crate::geom::Pose;
use crate::par::Exec;
use crate::rng::{derive_seed, substream, SimRng};
use rand::Rng;

/// Monte Carlo estimate of `E[gain] / cost` for taking `action` at `pose`.
///
/// Sample `s` draws its reading from `substream(seed, s)`, so the estimate
/// does not depend on how samples are scheduled. The belief is not touched.
pub fn expected_utility_mc<D: Domain>(
    domain: &D,
    belief: &D::Belief,
    pose: &Pose,
    action: &Action,
    n_samples: usize,
    seed: u64,
    exec: Exec,
) -> f64 {
    let h0 = domain.entropy(belief);
    if h0 <= 0.0 || n_samples == 0 {
        return 0.0;
    }
    let Some(next) = domain.next_pose(pose, action) else {
        return 0.0;
    };
    let at = sensing_pose(&next, action.motion);
    let gains = exec.map_range(n_samples, |s| sample_gain(domain, belief, h0, &at, action, seed, s));
    gains.iter().sum::<f64>() / n_samples as f64 / action.cost
}

fn sample_gain<D: Domain>(domain: &D, belief: &D::Belief, h0: f64, at: &Pose, a: &Action, seed: u64, s: usize) -> f64 {
    let mut b = belief.clone();
    let mut rng = substream(seed, s as u64);
    domain.simulate(&mut b, at, a.sensor, &mut rng);
    h0 - domain.entropy(&b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyReport {
    pub action: usize,
    /// Utility of every feasible action, in index order.
    pub utilities: Vec<ChildStat>,
}

/// Best information gain per unit cost over the feasible actions; ties go to
/// the lowest action index.
pub fn greedy_step<D: Domain>(
    domain: &D,
    belief: &D::Belief,
    pose: &Pose,
    remaining: f64,
    cfg: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<GreedyReport, PlanError> {
    let feasible = feasible_actions(domain, pose, remaining);
    if feasible.is_empty() {
        return Err(PlanError::NoFeasibleAction);
    }
    let base: u64 = rng.random();
    let h0 = domain.entropy(belief);
    let n = cfg.n_samples;
    let actions = domain.actions();
    let gains = cfg.exec.map_range(feasible.len() * n, |job| {
        if h0 <= 0.0 {
            return 0.0;
        }
        let a = &actions[feasible[job / n]];
        let next = domain.next_pose(pose, a).expect("feasible");
        let at = sensing_pose(&next, a.motion);
        sample_gain(
            domain,
            belief,
            h0,
            &at,
            a,
            derive_seed(base, &[feasible[job / n] as u64]),
            job % n,
        )
    });
    let utilities: Vec<ChildStat> = feasible
        .iter()
        .zip(gains.chunks(n))
        .map(|(&a, g)| ChildStat {
            action: a,
            value: g.iter().sum::<f64>() / n as f64 / actions[a].cost,
            visits: n as u32,
        })
        .collect();
    let mut best = &utilities[0];
    for u in &utilities[1..] {
        if u.value > best.value {
            best = u;
        }
    }
    Ok(GreedyReport {
        action: best.action,
        utilities,
    })
}
