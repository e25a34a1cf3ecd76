use super::{Action, Dir4, Domain, Motion, PlanError};
use crate::geom::{Cell, GridDims, Pose};
use crate::world::SensorId;
use serde::{Deserialize, Serialize};

/// The five-stage Mars schedule: camera ahead, camera left, camera right, UV
/// in place, then one cell forward with the camera. A stage that cannot be
/// taken is skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPolicy {
    stages: [Action; 5],
    next: usize,
}

impl FixedPolicy {
    pub fn new(camera_cost: f64, uv_cost: f64) -> Self {
        FixedPolicy {
            stages: [
                Action::new(Motion::Hold, SensorId::Camera, camera_cost),
                Action::new(Motion::Pan(2), SensorId::Camera, camera_cost),
                Action::new(Motion::Pan(-2), SensorId::Camera, camera_cost),
                Action::new(Motion::Hold, SensorId::Uv, uv_cost),
                Action::new(Motion::Forward, SensorId::Camera, camera_cost),
            ],
            next: 0,
        }
    }

    pub fn stages(&self) -> &[Action] {
        &self.stages
    }

    /// Next feasible stage as `(stage index, action)`.
    pub fn step<D: Domain>(&mut self, domain: &D, pose: &Pose, remaining: f64) -> Result<(usize, Action), PlanError> {
        for k in 0..self.stages.len() {
            let s = (self.next + k) % self.stages.len();
            if domain.is_feasible(pose, remaining, &self.stages[s]).is_some() {
                self.next = (s + 1) % self.stages.len();
                return Ok((s, self.stages[s]));
            }
        }
        Err(PlanError::NoFeasibleAction)
    }
}

/// A boustrophedon route with NSS stops along it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawnmowerPlan {
    /// Visited cells, start first and goal last; neighbours are 4-adjacent.
    pub path: Vec<Cell>,
    /// Path indices where the NSS is read, ascending, repeats allowed.
    pub nss_at: Vec<usize>,
}

impl LawnmowerPlan {
    pub fn moves(&self) -> usize {
        self.path.len() - 1
    }

    /// Stays and steps in execution order.
    pub fn actions(&self, nss_cost: f64) -> Vec<Action> {
        let mut out = Vec::with_capacity(self.path.len() + self.nss_at.len());
        let mut stops = self.nss_at.iter().peekable();
        for (i, w) in self.path.windows(2).map(Some).chain([None]).enumerate() {
            while stops.next_if(|&&s| s == i).is_some() {
                out.push(Action::new(Motion::Stay, SensorId::Nss, nss_cost));
            }
            if let Some(w) = w {
                out.push(Action::new(
                    Motion::Step(direction(w[0], w[1])),
                    SensorId::TerrainCamera,
                    1.0,
                ));
            }
        }
        out
    }
}

fn direction(a: Cell, b: Cell) -> Dir4 {
    match (b.x as i64 - a.x as i64, b.y as i64 - a.y as i64) {
        (0, 1) => Dir4::North,
        (1, 0) => Dir4::East,
        (0, -1) => Dir4::South,
        (-1, 0) => Dir4::West,
        d => panic!("cells are not adjacent: {d:?}"),
    }
}

/// Appends the straight run from the path's last cell to `to` (same row or
/// column), excluding the current cell.
fn run_to(path: &mut Vec<Cell>, to: Cell) {
    let mut c = *path.last().expect("non-empty path");
    while c.x != to.x {
        c.x = if to.x > c.x { c.x + 1 } else { c.x - 1 };
        path.push(c);
    }
    while c.y != to.y {
        c.y = if to.y > c.y { c.y + 1 } else { c.y - 1 };
        path.push(c);
    }
}

/// Column sweeps `spacing` apart from the start column to the goal column.
fn sweep(dims: GridDims, start: Cell, goal: Cell, spacing: usize) -> Vec<Cell> {
    let top = dims.height - 1;
    let mut lanes = Vec::new();
    let mut x = start.x as i64;
    let step = if goal.x >= start.x {
        spacing as i64
    } else {
        -(spacing as i64)
    };
    while x != goal.x as i64 && (x - goal.x as i64).signum() == (start.x as i64 - goal.x as i64).signum() {
        lanes.push(x as usize);
        x += step;
    }
    lanes.push(goal.x);
    let mut path = vec![start];
    // First sweep heads for the far edge.
    let mut up = start.y * 2 < top;
    for (k, &lx) in lanes.iter().enumerate() {
        let y = path.last().unwrap().y;
        run_to(&mut path, Cell::new(lx, y));
        if k + 1 == lanes.len() {
            run_to(&mut path, goal);
        } else {
            run_to(&mut path, Cell::new(lx, if up { top } else { 0 }));
            up = !up;
        }
    }
    path
}

/// Coverage baseline: half the budget for movement, half for NSS readings.
///
/// The route is the densest column sweep from `start` to `goal` whose length
/// fits in half the budget. When even the direct route exceeds half, the
/// direct route is used and the NSS gets whatever is left.
pub fn lawnmower_plan(
    dims: GridDims,
    start: Cell,
    goal: Cell,
    budget: f64,
    nss_cost: f64,
) -> Result<LawnmowerPlan, PlanError> {
    if !(nss_cost > 0.0) {
        return Err(PlanError::Config("nss cost must be positive".into()));
    }
    for c in [start, goal] {
        if !dims.contains(c.x as i64, c.y as i64) {
            return Err(PlanError::Config(format!(
                "cell ({}, {}) is outside the grid",
                c.x, c.y
            )));
        }
    }
    if start.manhattan(goal) as f64 > budget {
        return Err(PlanError::GoalUnreachable(goal));
    }
    let cap = (0.5 * budget).floor() as usize;
    let max_spacing = start.x.abs_diff(goal.x).max(1);
    let path = (1..=max_spacing)
        .map(|s| sweep(dims, start, goal, s))
        .find(|p| p.len() - 1 <= cap)
        .unwrap_or_else(|| {
            let mut p = vec![start];
            run_to(&mut p, goal);
            p
        });
    let moves = (path.len() - 1) as f64;
    let n = ((0.5 * budget / nss_cost).floor())
        .min(((budget - moves) / nss_cost).floor())
        .max(0.0) as usize;
    let nss_at = (0..n)
        .map(|k| ((k as f64 + 0.5) * path.len() as f64 / n as f64) as usize)
        .collect();
    Ok(LawnmowerPlan { path, nss_at })
}
