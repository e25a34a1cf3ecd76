//! Action spaces, feasibility and the planners.
//!
//! A planner sees a [`Domain`]: the indexed action space, how motions move
//! the robot, which cells are blocked, the goal, and how to simulate a
//! reading against a belief. Planners never read the ground truth; every
//! lookahead reading is drawn from the belief's predictive distribution.

mod baseline;
mod domains;
mod greedy;
mod mcts;

pub use baseline::{lawnmower_plan, FixedPolicy, LawnmowerPlan};
pub use domains::{mars_actions, mvp_actions, MarsDomain, MvpDomain};
pub use greedy::{expected_utility_mc, greedy_step, GreedyReport};
pub use mcts::{mcts_step, rollout, rollout_reward, ucb, McNode, MctsReport, SearchTree};

use crate::geom::{Cell, GridDims, Pose};
use crate::par::Exec;
use crate::rng::SimRng;
use crate::world::SensorId;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no feasible action")]
    NoFeasibleAction,
    #[error("goal ({}, {}) cannot be reached within the budget", .0.x, .0.y)]
    GoalUnreachable(Cell),
    #[error("invalid planner config: {0}")]
    Config(String),
}

/// Cardinal step on the terrain/water grid. North is `+y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir4 {
    North,
    East,
    South,
    West,
}

impl Dir4 {
    pub const ALL: [Dir4; 4] = [Dir4::North, Dir4::East, Dir4::South, Dir4::West];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Dir4::North => (0, 1),
            Dir4::East => (1, 0),
            Dir4::South => (0, -1),
            Dir4::West => (-1, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    /// One cell along the heading.
    Forward,
    /// Rotate in place by this many eighths of a turn, counter-clockwise.
    Turn(i8),
    /// Stay put, sensor along the heading.
    Hold,
    /// Stay put, sensor pointed this many eighths off the heading.
    Pan(i8),
    /// Stay put (terrain/water grid).
    Stay,
    Step(Dir4),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub motion: Motion,
    pub sensor: SensorId,
    pub cost: f64,
}

impl Action {
    pub fn new(motion: Motion, sensor: SensorId, cost: f64) -> Self {
        Action { motion, sensor, cost }
    }
}

/// Robot pose after `motion`, ignoring bounds.
pub fn apply_motion(pose: &Pose, motion: Motion) -> (i64, i64, Pose) {
    let (x, y) = (pose.cell.x as i64, pose.cell.y as i64);
    match motion {
        Motion::Forward => {
            let h = pose.heading.unwrap_or(crate::geom::Heading::EAST);
            let (dx, dy) = h.step();
            (x + dx, y + dy, *pose)
        }
        Motion::Turn(k) => {
            let turned = Pose {
                heading: pose.heading.map(|h| h.turned(k as i32)),
                ..*pose
            };
            (x, y, turned)
        }
        Motion::Step(d) => {
            let (dx, dy) = d.delta();
            (x + dx, y + dy, *pose)
        }
        Motion::Hold | Motion::Pan(_) | Motion::Stay => (x, y, *pose),
    }
}

/// The pose a sensor is read from once the robot is at `pose`.
pub fn sensing_pose(pose: &Pose, motion: Motion) -> Pose {
    match motion {
        Motion::Pan(k) => Pose {
            heading: pose.heading.map(|h| h.turned(k as i32)),
            ..*pose
        },
        _ => *pose,
    }
}

/// What a planner needs to know about a scenario.
pub trait Domain: Sync {
    type Belief: Clone + Send + Sync;

    fn grid(&self) -> GridDims;

    /// The indexed action space used by random, greedy and MCTS planners.
    fn actions(&self) -> &[Action];

    fn goal(&self) -> Option<Cell>;

    fn is_blocked(&self, _cell: Cell) -> bool {
        false
    }

    /// Draws a reading of `sensor` at `pose` from the belief's predictive
    /// distribution and folds it in.
    fn simulate(&self, belief: &mut Self::Belief, pose: &Pose, sensor: SensorId, rng: &mut SimRng);

    /// Entropy of the target variable in bits.
    fn entropy(&self, belief: &Self::Belief) -> f64;

    /// Pose after `action`, or `None` when it leaves the grid or enters a
    /// blocked cell.
    fn next_pose(&self, pose: &Pose, action: &Action) -> Option<Pose> {
        let (x, y, moved) = apply_motion(pose, action.motion);
        let g = self.grid();
        if !g.contains(x, y) {
            return None;
        }
        let cell = Cell::new(x as usize, y as usize);
        if cell != pose.cell && self.is_blocked(cell) {
            return None;
        }
        Some(Pose { cell, ..moved })
    }

    /// Affordable, in bounds, unblocked, and leaving enough budget to reach
    /// the goal.
    fn is_feasible(&self, pose: &Pose, remaining: f64, action: &Action) -> Option<Pose> {
        if action.cost > remaining {
            return None;
        }
        let next = self.next_pose(pose, action)?;
        if let Some(goal) = self.goal() {
            if action.cost + next.cell.manhattan(goal) as f64 > remaining {
                return None;
            }
        }
        Some(next)
    }
}

/// Indices into `domain.actions()` that may be taken now, in index order.
pub fn feasible_actions<D: Domain>(domain: &D, pose: &Pose, remaining: f64) -> Vec<usize> {
    domain
        .actions()
        .iter()
        .enumerate()
        .filter(|(_, a)| domain.is_feasible(pose, remaining, a).is_some())
        .map(|(i, _)| i)
        .collect()
}

/// Uniform choice among feasible actions.
pub fn random_step<D: Domain>(domain: &D, pose: &Pose, remaining: f64, rng: &mut SimRng) -> Result<usize, PlanError> {
    let feasible = feasible_actions(domain, pose, remaining);
    if feasible.is_empty() {
        return Err(PlanError::NoFeasibleAction);
    }
    Ok(feasible[rng.random_range(0..feasible.len())])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Random,
    Fixed,
    Lawnmower,
    Greedy,
    Mcts,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Random => "random",
            PlannerKind::Fixed => "fixed",
            PlannerKind::Lawnmower => "lawnmower",
            PlannerKind::Greedy => "greedy",
            PlannerKind::Mcts => "mcts",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    /// UCB exploration constant.
    pub c_p: f64,
    /// MCTS select-expand-simulate-backpropagate cycles per decision.
    pub iterations: usize,
    /// Greedy Monte Carlo samples per action.
    pub n_samples: usize,
    /// Optional cap on tree depth plus rollout length, in actions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub exec: Exec,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            kind: PlannerKind::Mcts,
            c_p: 0.1,
            iterations: 100,
            n_samples: 20,
            horizon: None,
            exec: Exec::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.c_p >= 0.0) {
            return Err(PlanError::Config("c_p must be non-negative".into()));
        }
        if self.iterations == 0 {
            return Err(PlanError::Config("iterations must be at least 1".into()));
        }
        if self.n_samples == 0 {
            return Err(PlanError::Config("n_samples must be at least 1".into()));
        }
        if self.horizon == Some(0) {
            return Err(PlanError::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }

    /// Display label such as `mcts-100`.
    pub fn label(&self) -> String {
        match self.kind {
            PlannerKind::Mcts => format!("mcts-{}", self.iterations),
            k => k.name().to_string(),
        }
    }
}

/// One JSON line per decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionLog {
    pub step: usize,
    pub pose: Pose,
    pub remaining: f64,
    pub action: usize,
    pub motion: Motion,
    pub sensor: SensorId,
    /// Per root child: action index, mean reward or utility, visits.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub children: Vec<ChildStat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildStat {
    pub action: usize,
    pub value: f64,
    pub visits: u32,
}
