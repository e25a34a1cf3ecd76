//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use infogather::geom::{Cell, GridDims, Pose};
use infogather::planning::{Action, Dir4, Domain, Motion};
use infogather::rng::SimRng;
use infogather::world::SensorId;
use rand::Rng;

/// Binary entropy of each cell, summed, in bits.
pub fn strip_entropy(b: &[f64]) -> f64 {
    b.iter()
        .map(|&p| {
            [p, 1.0 - p]
                .iter()
                .filter(|&&q| q > 0.0)
                .map(|&q| -q * q.log2())
                .sum::<f64>()
        })
        .sum()
}

/// A row of binary cells, each read by its own symmetric noisy sensor.
/// The robot either reads where it stands or steps east and reads there.
#[derive(Clone, Debug)]
pub struct Strip {
    pub accuracy: Vec<f64>,
    pub actions: Vec<Action>,
}

impl Strip {
    pub fn new(accuracy: Vec<f64>) -> Self {
        Strip {
            accuracy,
            actions: vec![
                Action::new(Motion::Stay, SensorId::Nss, 1.0),
                Action::new(Motion::Step(Dir4::East), SensorId::Nss, 1.0),
            ],
        }
    }

    /// Posterior `P(class 1)` after reading `z` at `cell`, and the reading's
    /// predictive probability.
    pub fn read(&self, b: &[f64], cell: usize, z: usize) -> (f64, f64) {
        let a = self.accuracy[cell];
        let (l0, l1) = if z == 1 { (1.0 - a, a) } else { (a, 1.0 - a) };
        let (w0, w1) = ((1.0 - b[cell]) * l0, b[cell] * l1);
        (w1 / (w0 + w1), w0 + w1)
    }
}

impl Domain for Strip {
    type Belief = Vec<f64>;

    fn grid(&self) -> GridDims {
        GridDims::new(self.accuracy.len(), 1)
    }

    fn actions(&self) -> &[Action] {
        &self.actions
    }

    fn goal(&self) -> Option<Cell> {
        None
    }

    fn simulate(&self, b: &mut Vec<f64>, pose: &Pose, _sensor: SensorId, rng: &mut SimRng) {
        let c = pose.cell.x;
        let (_, p1) = self.read(b, c, 1);
        let z = usize::from(rng.random::<f64>() < p1);
        b[c] = self.read(b, c, z).0;
    }

    fn entropy(&self, b: &Vec<f64>) -> f64 {
        strip_entropy(b)
    }
}

/// Exhaustive expectimax over actions and readings. Returns the value of
/// every first action (None when infeasible); the value is the expected
/// fraction of the starting entropy removed by the end of the budget.
pub fn expectimax(d: &Strip, b: &[f64], x: usize, budget: usize) -> Vec<Option<f64>> {
    let h0 = strip_entropy(b);
    let n = d.accuracy.len();
    fn value(d: &Strip, b: &mut Vec<f64>, x: usize, left: usize, h0: f64, n: usize) -> f64 {
        let mut best: Option<f64> = None;
        for a in 0..2 {
            if let Some(v) = action_value(d, b, x, left, a, h0, n) {
                best = Some(best.map_or(v, |m: f64| m.max(v)));
            }
        }
        best.unwrap_or_else(|| ((h0 - strip_entropy(b)) / h0).clamp(0.0, 1.0))
    }
    fn action_value(d: &Strip, b: &mut Vec<f64>, x: usize, left: usize, a: usize, h0: f64, n: usize) -> Option<f64> {
        let nx = if a == 0 { x } else { x + 1 };
        if left == 0 || nx >= n {
            return None;
        }
        let old = b[nx];
        let mut v = 0.0;
        for z in 0..2 {
            let (post, pz) = d.read(b, nx, z);
            b[nx] = post;
            v += pz * value(d, b, nx, left - 1, h0, n);
            b[nx] = old;
        }
        Some(v)
    }
    let mut b = b.to_vec();
    (0..2).map(|a| action_value(d, &mut b, x, budget, a, h0, n)).collect()
}

/// A grid of binary cells with a kernel-linked belief and one noisy reader
/// `L -> Z`. The robot reads where it stands or one cell east.
pub struct Quad {
    pub net: infogather::knowledge::TreeNet,
    pub dims: GridDims,
    pub actions: Vec<Action>,
}

impl Quad {
    pub fn new(dims: GridDims, accuracy: f64) -> Self {
        use infogather::knowledge::{NodeSpec, TreeNet};
        let net = TreeNet::new(vec![
            NodeSpec::root("L", vec![0.5, 0.5]),
            NodeSpec::child(
                "Z",
                "L",
                vec![vec![accuracy, 1.0 - accuracy], vec![1.0 - accuracy, accuracy]],
            ),
        ])
        .unwrap();
        Quad {
            net,
            dims,
            actions: vec![
                Action::new(Motion::Stay, SensorId::Nss, 1.0),
                Action::new(Motion::Step(Dir4::East), SensorId::Nss, 1.0),
            ],
        }
    }

    pub fn reading(&self, cell: Cell, z: usize) -> infogather::world::Observation {
        infogather::world::Observation {
            sensor: SensorId::Nss,
            pose: Pose::at(cell.x, cell.y),
            findings: vec![infogather::world::CellFinding {
                cell,
                node: 1,
                finding: infogather::knowledge::Finding::Hard(z),
            }],
        }
    }

    /// `P(Z = z)` at `cell` under the belief, by summing over `L`.
    pub fn predictive(&self, b: &infogather::belief::GridBelief, cell: Cell, z: usize) -> f64 {
        let l = b.family("L").unwrap();
        let p = l.cell(cell);
        (0..2).map(|k| p[k] * self.net.row(1, k)[z]).sum()
    }

    /// Exact expected entropy drop of reading `cell`.
    pub fn expected_gain(&self, b: &infogather::belief::GridBelief, cell: Cell) -> f64 {
        let h0 = self.entropy(b);
        (0..2)
            .map(|z| self.predictive(b, cell, z) * (h0 - self.entropy(&b.updated(&self.reading(cell, z)).unwrap())))
            .sum()
    }
}

impl Domain for Quad {
    type Belief = infogather::belief::GridBelief;

    fn grid(&self) -> GridDims {
        self.dims
    }

    fn actions(&self) -> &[Action] {
        &self.actions
    }

    fn goal(&self) -> Option<Cell> {
        None
    }

    fn simulate(&self, b: &mut Self::Belief, pose: &Pose, _sensor: SensorId, rng: &mut SimRng) {
        let z = usize::from(rng.random::<f64>() < self.predictive(b, pose.cell, 1));
        b.update(&self.reading(pose.cell, z)).unwrap();
    }

    fn entropy(&self, b: &Self::Belief) -> f64 {
        infogather::belief::total_entropy(&b.family("L").unwrap())
    }
}
