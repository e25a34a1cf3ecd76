use super::{Action, Dir4, Domain, Motion};
use crate::belief::{MarsBelief, MarsModel};
use crate::geom::{Cell, GridDims, Pose};
use crate::learning::{MvpBelief, MvpModel};
use crate::rng::SimRng;
use crate::world::SensorId;
use std::sync::Arc;

/// Forward and four turns, each paired with the camera or the UV light.
/// Index `2 * motion + sensor`, camera first.
pub fn mars_actions(camera_cost: f64, uv_cost: f64) -> Vec<Action> {
    let motions = [
        Motion::Forward,
        Motion::Turn(2),
        Motion::Turn(1),
        Motion::Turn(-1),
        Motion::Turn(-2),
    ];
    motions
        .iter()
        .flat_map(|&m| {
            [
                Action::new(m, SensorId::Camera, camera_cost),
                Action::new(m, SensorId::Uv, uv_cost),
            ]
        })
        .collect()
}

/// Stay and read the NSS, or step N/E/S/W with a terrain image of the
/// entered cell.
pub fn mvp_actions(nss_cost: f64) -> Vec<Action> {
    let mut v = vec![Action::new(Motion::Stay, SensorId::Nss, nss_cost)];
    v.extend(
        Dir4::ALL
            .iter()
            .map(|&d| Action::new(Motion::Step(d), SensorId::TerrainCamera, 1.0)),
    );
    v
}

#[derive(Clone, Debug)]
pub struct MarsDomain {
    pub model: Arc<MarsModel>,
    pub actions: Vec<Action>,
    /// Occupied location cells, row-major; empty means open terrain.
    pub blocked: Vec<bool>,
    pub goal: Option<Cell>,
}

impl MarsDomain {
    pub fn new(model: Arc<MarsModel>, actions: Vec<Action>) -> Self {
        MarsDomain {
            model,
            actions,
            blocked: Vec::new(),
            goal: None,
        }
    }
}

impl Domain for MarsDomain {
    type Belief = MarsBelief;

    fn grid(&self) -> GridDims {
        self.model.loc
    }

    fn actions(&self) -> &[Action] {
        &self.actions
    }

    fn goal(&self) -> Option<Cell> {
        self.goal
    }

    fn is_blocked(&self, cell: Cell) -> bool {
        !self.blocked.is_empty() && self.blocked[self.model.loc.index(cell)]
    }

    fn simulate(&self, belief: &mut MarsBelief, pose: &Pose, sensor: SensorId, rng: &mut SimRng) {
        belief.simulate(sensor, pose, rng);
    }

    fn entropy(&self, belief: &MarsBelief) -> f64 {
        belief.total_entropy()
    }
}

#[derive(Clone, Debug)]
pub struct MvpDomain {
    pub model: Arc<MvpModel>,
    pub actions: Vec<Action>,
    pub goal: Option<Cell>,
}

impl Domain for MvpDomain {
    type Belief = MvpBelief;

    fn grid(&self) -> GridDims {
        self.model.grid
    }

    fn actions(&self) -> &[Action] {
        &self.actions
    }

    fn goal(&self) -> Option<Cell> {
        self.goal
    }

    fn simulate(&self, belief: &mut MvpBelief, pose: &Pose, sensor: SensorId, rng: &mut SimRng) {
        belief.simulate(sensor, pose, rng);
    }

    fn entropy(&self, belief: &MvpBelief) -> f64 {
        belief.water_entropy()
    }
}
