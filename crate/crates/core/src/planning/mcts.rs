use super::{feasible_actions, sensing_pose, ChildStat, Domain, PlanError, PlannerConfig};
use crate::geom::Pose;
use crate::rng::SimRng;
use rand::Rng;

/// `mean + c_p * sqrt(2 ln N / n)`, infinite for an unvisited node.
pub fn ucb(node: &McNode, c_p: f64, parent_visits: u32) -> f64 {
    if node.visits == 0 {
        return f64::INFINITY;
    }
    node.mean + c_p * (2.0 * (parent_visits as f64).ln() / node.visits as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct McNode {
    /// Action leading here; `None` at the root.
    pub action: Option<usize>,
    pub pose: Pose,
    pub remaining: f64,
    pub depth: usize,
    pub mean: f64,
    pub visits: u32,
    pub children: Vec<usize>,
    unexpanded: Vec<usize>,
}

impl McNode {
    fn new<D: Domain>(
        domain: &D,
        action: Option<usize>,
        pose: Pose,
        remaining: f64,
        depth: usize,
        horizon: Option<usize>,
    ) -> Self {
        let unexpanded = if horizon.is_some_and(|h| depth >= h) {
            Vec::new()
        } else {
            feasible_actions(domain, &pose, remaining)
        };
        McNode {
            action,
            pose,
            remaining,
            depth,
            mean: 0.0,
            visits: 0,
            children: Vec::new(),
            unexpanded,
        }
    }

    pub fn is_fully_expanded(&self) -> bool {
        self.unexpanded.is_empty()
    }
}

/// Open-loop search tree: nodes hold action sequences, not beliefs. Every
/// iteration replays its path against a fresh copy of the root belief with
/// newly sampled readings.
#[derive(Clone, Debug)]
pub struct SearchTree {
    pub nodes: Vec<McNode>,
}

impl SearchTree {
    pub fn new<D: Domain>(domain: &D, pose: &Pose, remaining: f64, horizon: Option<usize>) -> Self {
        SearchTree {
            nodes: vec![McNode::new(domain, None, *pose, remaining, 0, horizon)],
        }
    }

    pub fn root(&self) -> &McNode {
        &self.nodes[0]
    }

    /// Runs `iterations` select-expand-simulate-backpropagate cycles.
    /// `on_backprop` sees each iteration's path (node ids) and reward.
    pub fn search<D: Domain>(
        &mut self,
        domain: &D,
        belief: &D::Belief,
        cfg: &PlannerConfig,
        rng: &mut SimRng,
        mut on_backprop: impl FnMut(&[usize], f64),
    ) {
        let root_pose = self.nodes[0].pose;
        let mut path = Vec::new();
        let mut seq = Vec::new();
        for _ in 0..cfg.iterations {
            path.clear();
            path.push(0);
            let mut node = 0;
            loop {
                let n = &self.nodes[node];
                if !n.unexpanded.is_empty() {
                    let pick = rng.random_range(0..n.unexpanded.len());
                    node = self.expand(domain, node, pick, cfg.horizon);
                    path.push(node);
                    break;
                }
                if n.children.is_empty() {
                    break;
                }
                node = self.select(node, cfg.c_p);
                path.push(node);
            }
            seq.clear();
            seq.extend(path[1..].iter().map(|&i| self.nodes[i].action.expect("non-root")));
            let leaf = &self.nodes[node];
            let cap = cfg.horizon.map(|h| h.saturating_sub(leaf.depth));
            seq.extend(rollout(domain, &leaf.pose, leaf.remaining, cap, rng));
            let reward = rollout_reward(domain, belief, &root_pose, &seq, rng);
            for &i in &path {
                let n = &mut self.nodes[i];
                n.visits += 1;
                n.mean += (reward - n.mean) / n.visits as f64;
            }
            on_backprop(&path, reward);
        }
    }

    fn expand<D: Domain>(&mut self, domain: &D, parent: usize, pick: usize, horizon: Option<usize>) -> usize {
        let a = self.nodes[parent].unexpanded.remove(pick);
        let p = &self.nodes[parent];
        let action = &domain.actions()[a];
        let pose = domain.next_pose(&p.pose, action).expect("feasible");
        let child = McNode::new(domain, Some(a), pose, p.remaining - action.cost, p.depth + 1, horizon);
        let id = self.nodes.len();
        self.nodes.push(child);
        self.nodes[parent].children.push(id);
        id
    }

    fn select(&self, node: usize, c_p: f64) -> usize {
        let parent = &self.nodes[node];
        let mut best: Option<(f64, usize, usize)> = None;
        for &c in &parent.children {
            let n = &self.nodes[c];
            let score = ucb(n, c_p, parent.visits);
            let a = n.action.expect("child");
            let better = match best {
                None => true,
                Some((s, ba, _)) => score > s || (score == s && a < ba),
            };
            if better {
                best = Some((score, a, c));
            }
        }
        best.expect("children").2
    }

    /// Root child with the highest mean reward; ties go to the lowest action
    /// index.
    pub fn best_action(&self) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for &c in &self.root().children {
            let n = &self.nodes[c];
            let a = n.action.expect("child");
            match best {
                Some((m, ba)) if !(n.mean > m || (n.mean == m && a < ba)) => {}
                _ => best = Some((n.mean, a)),
            }
        }
        best.map(|(_, a)| a)
    }

    pub fn root_stats(&self) -> Vec<ChildStat> {
        let mut v: Vec<ChildStat> = self
            .root()
            .children
            .iter()
            .map(|&c| {
                let n = &self.nodes[c];
                ChildStat {
                    action: n.action.expect("child"),
                    value: n.mean,
                    visits: n.visits,
                }
            })
            .collect();
        v.sort_by_key(|s| s.action);
        v
    }
}

/// Uniformly random feasible actions from `pose` until none is left or
/// `max_len` actions were drawn.
pub fn rollout<D: Domain>(
    domain: &D,
    pose: &Pose,
    remaining: f64,
    max_len: Option<usize>,
    rng: &mut SimRng,
) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut pose, mut remaining) = (*pose, remaining);
    let actions = domain.actions();
    let mut feasible = Vec::with_capacity(actions.len());
    while max_len.is_none_or(|m| out.len() < m) {
        feasible.clear();
        feasible.extend(
            (0..actions.len()).filter_map(|i| domain.is_feasible(&pose, remaining, &actions[i]).map(|p| (i, p))),
        );
        if feasible.is_empty() {
            break;
        }
        let (a, next) = feasible[rng.random_range(0..feasible.len())];
        out.push(a);
        pose = next;
        remaining -= actions[a].cost;
    }
    out
}

/// Executes `seq` from `pose` on a copy of `belief` with sampled readings and
/// returns the fraction of the starting entropy removed, clamped to `[0, 1]`.
pub fn rollout_reward<D: Domain>(domain: &D, belief: &D::Belief, pose: &Pose, seq: &[usize], rng: &mut SimRng) -> f64 {
    let h0 = domain.entropy(belief);
    if h0 <= 0.0 || seq.is_empty() {
        return 0.0;
    }
    let mut b = belief.clone();
    let mut pose = *pose;
    for &a in seq {
        let action = &domain.actions()[a];
        pose = domain.next_pose(&pose, action).expect("sequence stays feasible");
        domain.simulate(&mut b, &sensing_pose(&pose, action.motion), action.sensor, rng);
    }
    ((h0 - domain.entropy(&b)) / h0).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MctsReport {
    pub action: usize,
    pub children: Vec<ChildStat>,
}

/// One decision: builds a fresh tree from the current belief and returns the
/// root action with the best mean reward.
pub fn mcts_step<D: Domain>(
    domain: &D,
    belief: &D::Belief,
    pose: &Pose,
    remaining: f64,
    cfg: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<MctsReport, PlanError> {
    let feasible = feasible_actions(domain, pose, remaining);
    match feasible.len() {
        0 => return Err(PlanError::NoFeasibleAction),
        1 => {
            return Ok(MctsReport {
                action: feasible[0],
                children: vec![],
            })
        }
        _ => {}
    }
    let mut tree = SearchTree::new(domain, pose, remaining, cfg.horizon);
    tree.search(domain, belief, cfg, rng, |_, _| {});
    Ok(MctsReport {
        action: tree.best_action().expect("root has feasible children"),
        children: tree.root_stats(),
    })
}
