//! Mars scenario: location blocks, a fine rock grid and a coarse UV grid,
//! all drawn from the geology network.

use super::WorldError;
use crate::geom::{Cell, GridDims, Heading};
use crate::knowledge::{NodeSpec, TreeNet};
use crate::rng::{stream, SimRng, Stream};
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Conditional probability settings for the default geology network.
/// Each value is the diagonal mass of a square table whose off-diagonal
/// mass is spread evenly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarsNetParams {
    /// P(R = l | L = l): rock classes weakly indicate location type.
    pub rock_given_location: f64,
    /// P(F_k = r | R = r) for every feature k.
    pub feature_given_rock: f64,
    /// P(Z_k = f | F_k = f): camera feature extraction accuracy.
    pub camera_accuracy: f64,
    /// P(B = l | L = l): UV-reflective material strongly indicates location.
    pub uv_given_location: f64,
    /// P(U = b | B = b): UV reading accuracy.
    pub uv_accuracy: f64,
}

impl Default for MarsNetParams {
    fn default() -> Self {
        MarsNetParams {
            rock_given_location: 0.4,
            feature_given_rock: 0.6,
            camera_accuracy: 0.8,
            uv_given_location: 0.98,
            uv_accuracy: 0.99,
        }
    }
}

pub fn diagonal_table(n: usize, diag: f64) -> Vec<Vec<f64>> {
    let off = (1.0 - diag) / (n - 1) as f64;
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { diag } else { off }).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarsWorldConfig {
    pub loc_grid: GridDims,
    /// Side of the homogeneous location blocks, in location cells.
    pub region_block: usize,
    pub rock_grid: GridDims,
    pub rock_density: f64,
    pub n_features: usize,
    pub n_categories: usize,
    /// Camera footprint in rock cells: depth ahead of the robot, then width.
    pub camera_fov: (usize, usize),
    pub net_params: MarsNetParams,
    /// Replaces the generated network when present. Must keep the node ids
    /// `L, R, F1.., Z1.., B, U` and the tree shape.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<Vec<NodeSpec>>,
    pub seed: u64,
}

impl Default for MarsWorldConfig {
    fn default() -> Self {
        MarsWorldConfig {
            loc_grid: GridDims::new(32, 32),
            region_block: 8,
            rock_grid: GridDims::new(640, 640),
            rock_density: 0.015,
            n_features: 3,
            n_categories: 3,
            camera_fov: (50, 40),
            net_params: MarsNetParams::default(),
            network: None,
            seed: 0,
        }
    }
}

impl MarsWorldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::Config(m.to_string()));
        if self.loc_grid.is_empty() || self.rock_grid.is_empty() {
            return bad("grids must be non-empty");
        }
        if self.rock_grid.width % self.loc_grid.width != 0
            || self.rock_grid.height % self.loc_grid.height != 0
            || self.rock_grid.width / self.loc_grid.width != self.rock_grid.height / self.loc_grid.height
        {
            return bad("rock grid must be the same integer multiple of the location grid on both axes");
        }
        if !(self.rock_density >= 0.0 && self.rock_density < 1.0) {
            return bad("rock_density must lie in [0, 1)");
        }
        if self.region_block == 0 {
            return bad("region_block must be positive");
        }
        if self.n_categories < 2 || self.n_features == 0 {
            return bad("need at least one feature and two categories");
        }
        self.network()?;
        Ok(())
    }

    /// Rock cells per location cell along one axis.
    pub fn scale(&self) -> usize {
        self.rock_grid.width / self.loc_grid.width
    }

    pub fn network(&self) -> Result<MarsNet, WorldError> {
        let specs = match &self.network {
            Some(s) => s.clone(),
            None => default_mars_specs(self.n_features, self.n_categories, &self.net_params),
        };
        MarsNet::new(TreeNet::new(specs)?, self.n_features)
    }
}

/// Geology network: `L → R → F_k → Z_k` for each feature `k`, and
/// `L → B → U` for the UV channel.
pub fn default_mars_specs(n_features: usize, n: usize, p: &MarsNetParams) -> Vec<NodeSpec> {
    let mut specs = vec![
        NodeSpec::root("L", vec![1.0 / n as f64; n]),
        NodeSpec::child("R", "L", diagonal_table(n, p.rock_given_location)),
    ];
    for k in 1..=n_features {
        specs.push(NodeSpec::child(
            &format!("F{k}"),
            "R",
            diagonal_table(n, p.feature_given_rock),
        ));
        specs.push(NodeSpec::child(
            &format!("Z{k}"),
            &format!("F{k}"),
            diagonal_table(n, p.camera_accuracy),
        ));
    }
    specs.push(NodeSpec::child("B", "L", diagonal_table(n, p.uv_given_location)));
    specs.push(NodeSpec::child("U", "B", diagonal_table(n, p.uv_accuracy)));
    specs
}

/// The geology network with its node indices resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct MarsNet {
    pub net: TreeNet,
    pub l: usize,
    pub r: usize,
    pub f: Vec<usize>,
    pub z: Vec<usize>,
    pub b: usize,
    pub u: usize,
}

impl MarsNet {
    pub fn new(net: TreeNet, n_features: usize) -> Result<Self, WorldError> {
        let ix = |id: &str| net.node_ix(id).map_err(WorldError::from);
        let l = ix("L")?;
        let r = ix("R")?;
        let b = ix("B")?;
        let u = ix("U")?;
        let f: Vec<usize> = (1..=n_features)
            .map(|k| ix(&format!("F{k}")))
            .collect::<Result<_, _>>()?;
        let z: Vec<usize> = (1..=n_features)
            .map(|k| ix(&format!("Z{k}")))
            .collect::<Result<_, _>>()?;
        let shape_ok = net.root() == l
            && net.parent(r) == Some(l)
            && net.parent(b) == Some(l)
            && net.parent(u) == Some(b)
            && f.iter().all(|&fk| net.parent(fk) == Some(r))
            && z.iter().zip(&f).all(|(&zk, &fk)| net.parent(zk) == Some(fk));
        if !shape_ok {
            return Err(WorldError::Config(
                "geology network must have shape L→R→F_k→Z_k and L→B→U".into(),
            ));
        }
        Ok(MarsNet { net, l, r, f, z, b, u })
    }

    pub fn n_loc(&self) -> usize {
        self.net.cardinality(self.l)
    }

    pub fn row(&self, node: usize, parent_cat: usize) -> &[f64] {
        self.net.row(node, parent_cat)
    }
}

pub(crate) fn sample_row(rng: &mut SimRng, row: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rock {
    /// Position on the rock grid.
    pub cell: Cell,
    pub class: u8,
    pub features: SmallVec<[u8; 4]>,
}

#[derive(Serialize, Deserialize)]
struct MarsSnapshot {
    config: MarsWorldConfig,
    location: Vec<u8>,
    uv: Vec<u8>,
    rocks: Vec<Rock>,
}

const NO_ROCK: u32 = u32::MAX;

/// Hidden Mars world.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "MarsSnapshot", try_from = "MarsSnapshot")]
pub struct MarsTruth {
    pub config: MarsWorldConfig,
    /// Location class per location cell, row-major.
    pub location: Vec<u8>,
    /// UV class per location cell, row-major.
    pub uv: Vec<u8>,
    pub rocks: Vec<Rock>,
    model: MarsNet,
    /// Rock index per rock-grid cell, `NO_ROCK` where empty.
    rock_at: Vec<u32>,
}

impl PartialEq for MarsTruth {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.location == other.location
            && self.uv == other.uv
            && self.rocks == other.rocks
    }
}

impl From<MarsTruth> for MarsSnapshot {
    fn from(t: MarsTruth) -> Self {
        MarsSnapshot {
            config: t.config,
            location: t.location,
            uv: t.uv,
            rocks: t.rocks,
        }
    }
}

impl TryFrom<MarsSnapshot> for MarsTruth {
    type Error = WorldError;

    fn try_from(s: MarsSnapshot) -> Result<Self, WorldError> {
        MarsTruth::assemble(s.config, s.location, s.uv, s.rocks)
    }
}

impl MarsTruth {
    fn assemble(config: MarsWorldConfig, location: Vec<u8>, uv: Vec<u8>, rocks: Vec<Rock>) -> Result<Self, WorldError> {
        config.validate()?;
        let model = config.network()?;
        let n = config.loc_grid.len();
        let n_loc = model.n_loc();
        if location.len() != n || uv.len() != n {
            return Err(WorldError::Snapshot("grid length does not match loc_grid".into()));
        }
        if location.iter().any(|&l| l as usize >= n_loc)
            || uv.iter().any(|&b| b as usize >= model.net.cardinality(model.b))
        {
            return Err(WorldError::Snapshot("category out of range".into()));
        }
        let mut rock_at = vec![NO_ROCK; config.rock_grid.len()];
        for (i, rock) in rocks.iter().enumerate() {
            if rock.cell.x >= config.rock_grid.width || rock.cell.y >= config.rock_grid.height {
                return Err(WorldError::Snapshot("rock outside the rock grid".into()));
            }
            if rock.features.len() != model.f.len() {
                return Err(WorldError::Snapshot("rock feature count mismatch".into()));
            }
            rock_at[config.rock_grid.index(rock.cell)] = i as u32;
        }
        Ok(MarsTruth {
            config,
            location,
            uv,
            rocks,
            model,
            rock_at,
        })
    }

    pub fn model(&self) -> &MarsNet {
        &self.model
    }

    pub fn location_at(&self, c: Cell) -> u8 {
        self.location[self.config.loc_grid.index(c)]
    }

    pub fn rock_at(&self, rock_cell: Cell) -> Option<&Rock> {
        match self.rock_at[self.config.rock_grid.index(rock_cell)] {
            NO_ROCK => None,
            i => Some(&self.rocks[i as usize]),
        }
    }
}

/// Samples a Mars world: one uniform location class per block, Bernoulli rock
/// placement, then rock class, features and UV class from the network CPTs.
pub fn gen_mars_world(cfg: &MarsWorldConfig) -> Result<MarsTruth, WorldError> {
    cfg.validate()?;
    let model = cfg.network()?;
    let mut rng = stream(cfg.seed, Stream::World);
    let lg = cfg.loc_grid;
    let n_loc = model.n_loc();

    let bw = lg.width.div_ceil(cfg.region_block);
    let bh = lg.height.div_ceil(cfg.region_block);
    let blocks: Vec<u8> = (0..bw * bh).map(|_| rng.random_range(0..n_loc) as u8).collect();
    let location: Vec<u8> = lg
        .cells()
        .map(|c| blocks[(c.y / cfg.region_block) * bw + c.x / cfg.region_block])
        .collect();

    let uv: Vec<u8> = location
        .iter()
        .map(|&l| sample_row(&mut rng, model.row(model.b, l as usize)) as u8)
        .collect();

    let scale = cfg.scale();
    let mut rocks = Vec::new();
    if cfg.rock_density > 0.0 {
        for y in 0..cfg.rock_grid.height {
            for x in 0..cfg.rock_grid.width {
                if rng.random::<f64>() < cfg.rock_density {
                    let l = location[lg.index(Cell::new(x / scale, y / scale))];
                    let class = sample_row(&mut rng, model.row(model.r, l as usize));
                    let features = model
                        .f
                        .iter()
                        .map(|&fk| sample_row(&mut rng, model.row(fk, class)) as u8)
                        .collect();
                    rocks.push(Rock {
                        cell: Cell::new(x, y),
                        class: class as u8,
                        features,
                    });
                }
            }
        }
    }
    MarsTruth::assemble(cfg.clone(), location, uv, rocks)
}

/// Rectangular camera footprint placed ahead of a pose. The rectangle starts
/// at the robot's position (centre of its location cell, in rock-grid units),
/// extends `depth` cells along the viewing direction and `width` cells across
/// it, and includes every rock cell whose centre falls inside.
///
/// The robot always sits at a location-cell centre, so the covered offsets
/// only depend on the heading and are computed once.
#[derive(Clone, Debug)]
pub struct CameraFootprint {
    pub depth: f64,
    pub half_width: f64,
    pub scale: usize,
    /// Per heading, rock-cell offsets from the robot cell's lower corner,
    /// sorted by `(y, x)`.
    offsets: Vec<Vec<(i32, i32)>>,
}

impl CameraFootprint {
    pub fn new(cfg: &MarsWorldConfig) -> Self {
        Self::with_geometry(cfg.camera_fov.0, cfg.camera_fov.1, cfg.scale())
    }

    pub fn with_geometry(depth: usize, width: usize, scale: usize) -> Self {
        let mut fp = CameraFootprint {
            depth: depth as f64,
            half_width: width as f64 / 2.0,
            scale,
            offsets: Vec::new(),
        };
        let reach = (depth + width + scale) as i32;
        fp.offsets = (0..8)
            .map(|h| {
                let view = Heading::new(h);
                let mut v = Vec::new();
                for dy in -reach..=reach {
                    for dx in -reach..=reach {
                        if fp.contains_offset(view, dx, dy) {
                            v.push((dx, dy));
                        }
                    }
                }
                v
            })
            .collect();
        fp
    }

    fn contains_offset(&self, view: Heading, dx: i32, dy: i32) -> bool {
        let half_cell = self.scale as f64 / 2.0;
        let (ux, uy) = view.unit();
        let px = dx as f64 + 0.5 - half_cell;
        let py = dy as f64 + 0.5 - half_cell;
        let fwd = px * ux + py * uy;
        let lat = -px * uy + py * ux;
        fwd >= -1e-9 && fwd < self.depth - 1e-9 && lat.abs() < self.half_width - 1e-9
    }

    /// Whether the centre of `rock_cell` lies inside the footprint of a robot
    /// at location cell `from` looking along `view`.
    pub fn contains(&self, from: Cell, view: Heading, rock_cell: Cell) -> bool {
        let s = self.scale as i64;
        let dx = rock_cell.x as i64 - from.x as i64 * s;
        let dy = rock_cell.y as i64 - from.y as i64 * s;
        self.contains_offset(view, dx as i32, dy as i32)
    }

    pub fn offsets(&self, view: Heading) -> &[(i32, i32)] {
        &self.offsets[view.eighths() as usize]
    }

    /// Every rock-grid cell inside the footprint, clipped to `rock_grid`.
    pub fn rock_cells(&self, rock_grid: GridDims, from: Cell, view: Heading) -> Vec<Cell> {
        let s = self.scale as i64;
        let (bx, by) = (from.x as i64 * s, from.y as i64 * s);
        self.offsets(view)
            .iter()
            .filter_map(|&(dx, dy)| {
                let (x, y) = (bx + dx as i64, by + dy as i64);
                rock_grid.contains(x, y).then(|| Cell::new(x as usize, y as usize))
            })
            .collect()
    }
}
