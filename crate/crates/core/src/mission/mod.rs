//! Mission loop, experiment ensembles, statistics and presets.
//!
//! A mission alternates plan, act, sense and update until no feasible action
//! is left. The loop is generic over [`Domain`]; the scenario decides the
//! belief type, the sensors and how the ground truth is read.

mod experiment;
mod presets;
mod stats;

pub use experiment::{run_experiment, ExperimentOutput, ExperimentSpec};
pub use presets::{preset, PRESETS};
pub use stats::{
    cohens_d, paired_t_test, summarize, summarize_scores, Comparison, Effect, GroupStats, Scores, StatsError,
    StatsSummary, TTest,
};

use crate::belief::{recognition_score, BeliefError, KernelSpec, MarsBelief, MarsModel};
use crate::geom::{Cell, Heading, Pose};
use crate::learning::{DirichletParams, LearningError, MvpBelief, MvpModel};
use crate::planning::{
    greedy_step, lawnmower_plan, mars_actions, mcts_step, mvp_actions, random_step, sensing_pose, Action, DecisionLog,
    Domain, FixedPolicy, MarsDomain, MvpDomain, PlanError, PlannerConfig, PlannerKind,
};
use crate::rng::{stream, SimRng, Stream};
use crate::world::{
    gen_mars_world, gen_voronoi_world, observe, synthetic_dataset, GroundTruth, MarsWorldConfig, MvpWorldConfig,
    Observation, ReplayDataset, SensorId, SensorSpec, WorldError,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("invalid mission config: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Learning(#[from] LearningError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for MissionError {
    fn from(e: std::io::Error) -> Self {
        MissionError::Io(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarsScenario {
    pub world: MarsWorldConfig,
    pub camera_cost: f64,
    pub uv_cost: f64,
}

impl Default for MarsScenario {
    fn default() -> Self {
        MarsScenario {
            world: MarsWorldConfig::default(),
            camera_cost: 1.0,
            uv_cost: 8.0,
        }
    }
}

/// Extra knowledge given to the robot before a terrain/water mission.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKnowledge {
    None,
    /// Every cell's terrain prior puts `p` on the true class, the rest
    /// spread evenly, as an orbital map would.
    TerrainHint {
        p: f64,
    },
    /// `boost` pseudo-counts on the designated water class of one terrain
    /// class.
    Mapping {
        terrain: usize,
        boost: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MvpScenario {
    pub world: MvpWorldConfig,
    pub image_error: f64,
    pub nss_error: f64,
    pub nss_cost: f64,
    /// Initial value of every Dirichlet pseudo-count.
    pub alpha: f64,
    pub prior: PriorKnowledge,
}

impl Default for MvpScenario {
    fn default() -> Self {
        MvpScenario {
            world: MvpWorldConfig::default(),
            image_error: 0.10,
            nss_error: 0.05,
            nss_cost: 5.0,
            alpha: 1.0,
            prior: PriorKnowledge::None,
        }
    }
}

/// Terrain/water missions on recorded soft readings. Without a `data` CSV a
/// synthetic dataset is drawn from `synthetic`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplayScenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    pub synthetic: MvpWorldConfig,
    /// Nominal classifier error rates; they define the planner's sensor
    /// models and, for synthetic data, the labelling noise.
    pub image_error: f64,
    pub nss_error: f64,
    pub nss_cost: f64,
    pub alpha: f64,
}

impl Default for ReplayScenario {
    fn default() -> Self {
        ReplayScenario {
            data: None,
            synthetic: MvpWorldConfig {
                grid: crate::geom::GridDims::new(10, 10),
                n_terrain: 4,
                n_water: 3,
                seed: 1,
                ..Default::default()
            },
            image_error: 0.10,
            nss_error: 0.05,
            nss_cost: 2.0,
            alpha: 1.0,
        }
    }
}

impl ReplayScenario {
    pub fn dataset(&self) -> Result<ReplayDataset, MissionError> {
        match &self.data {
            Some(path) => {
                let f = std::fs::File::open(path).map_err(|e| MissionError::Io(format!("{path}: {e}")))?;
                Ok(ReplayDataset::read_csv(f)?)
            }
            None => Ok(synthetic_dataset(&self.synthetic, self.image_error, self.nss_error)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Mars(MarsScenario),
    Mvp(MvpScenario),
    Replay(ReplayScenario),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionConfig {
    pub scenario: Scenario,
    pub planner: PlannerConfig,
    pub budget: f64,
    /// Mars default: random cell and heading per map. Terrain/water default:
    /// the south-west corner.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<Pose>,
    /// Terrain/water default: the north-east corner. Mars default: none.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal: Option<Cell>,
    pub kernel: KernelSpec,
    pub seed: u64,
    /// Keep per-child planner statistics in the action log.
    pub log_decisions: bool,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            scenario: Scenario::Mars(MarsScenario::default()),
            planner: PlannerConfig::default(),
            budget: 100.0,
            start: None,
            goal: None,
            kernel: KernelSpec::default(),
            seed: 0,
            log_decisions: false,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), MissionError> {
        let bad = |m: String| Err(MissionError::Config(m));
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return bad("budget must be a finite non-negative number".into());
        }
        self.planner.validate()?;
        self.kernel.validate()?;
        let kind = self.planner.kind;
        match &self.scenario {
            Scenario::Mars(s) => {
                s.world.validate()?;
                if !(s.camera_cost > 0.0 && s.uv_cost > 0.0) {
                    return bad("sensor costs must be positive".into());
                }
                if kind == PlannerKind::Lawnmower {
                    return bad("the lawnmower planner needs the terrain/water scenario".into());
                }
            }
            Scenario::Mvp(s) => {
                s.world.validate()?;
                check_mvp_sensors(s.image_error, s.nss_error, s.nss_cost, s.alpha)?;
                if kind == PlannerKind::Fixed {
                    return bad("the fixed planner needs the Mars scenario".into());
                }
                match s.prior {
                    PriorKnowledge::TerrainHint { p } if !(0.0..=1.0).contains(&p) => {
                        return bad("terrain hint must lie in [0, 1]".into())
                    }
                    PriorKnowledge::Mapping { terrain, boost } if terrain >= s.world.n_terrain || !(boost >= 0.0) => {
                        return bad("mapping prior needs an existing terrain class and a non-negative boost".into())
                    }
                    _ => {}
                }
            }
            Scenario::Replay(s) => {
                check_mvp_sensors(s.image_error, s.nss_error, s.nss_cost, s.alpha)?;
                if kind == PlannerKind::Fixed {
                    return bad("the fixed planner needs the Mars scenario".into());
                }
            }
        }
        Ok(())
    }

    /// Generates the map for this config's seed.
    pub fn world(&self) -> Result<GroundTruth, MissionError> {
        match &self.scenario {
            Scenario::Mars(s) => Ok(GroundTruth::Mars(gen_mars_world(&MarsWorldConfig {
                seed: self.seed,
                ..s.world.clone()
            })?)),
            Scenario::Mvp(s) => Ok(GroundTruth::Mvp(gen_voronoi_world(&MvpWorldConfig {
                seed: self.seed,
                ..s.world.clone()
            })?)),
            Scenario::Replay(s) => Ok(GroundTruth::Mvp(s.dataset()?.layout(s.synthetic.grid, self.seed)?)),
        }
    }

    /// The configured start, or the scenario default for `world`.
    pub fn start_pose(&self, world: &GroundTruth) -> Pose {
        if let Some(p) = self.start {
            return p;
        }
        match world {
            GroundTruth::Mars(_) => {
                let g = world.grid();
                let mut rng = stream(self.seed, Stream::Start);
                let x = rng.random_range(0..g.width);
                let y = rng.random_range(0..g.height);
                Pose::facing(x, y, Heading::new(rng.random_range(0..8)))
            }
            GroundTruth::Mvp(_) => Pose::at(0, 0),
        }
    }

    pub fn goal_cell(&self, world: &GroundTruth) -> Option<Cell> {
        match (&self.scenario, self.goal) {
            (_, Some(g)) => Some(g),
            (Scenario::Mars(_), None) => None,
            _ => {
                let g = world.grid();
                Some(Cell::new(g.width - 1, g.height - 1))
            }
        }
    }
}

fn check_mvp_sensors(image: f64, nss: f64, nss_cost: f64, alpha: f64) -> Result<(), MissionError> {
    if !((0.0..1.0).contains(&image) && (0.0..1.0).contains(&nss)) {
        return Err(MissionError::Config("sensor error rates must lie in [0, 1)".into()));
    }
    if !(nss_cost > 0.0 && alpha > 0.0) {
        return Err(MissionError::Config("nss cost and alpha must be positive".into()));
    }
    Ok(())
}

/// Metrics after one executed action (step 0 is the starting belief).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub budget_spent: f64,
    pub info_gain_bits: f64,
    pub recognition: f64,
}

/// Wall-clock time; ignored by equality so reruns compare equal.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct WallMs(pub f64);

impl PartialEq for WallMs {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub map_id: usize,
    pub planner: String,
    pub budget: f64,
    pub seed: u64,
    pub world_checksum: u64,
    pub start: Pose,
    /// Pose after the last action.
    pub end: Pose,
    pub info_gain_bits: f64,
    pub recognition: f64,
    pub budget_spent: f64,
    pub trace: Vec<StepMetrics>,
    pub actions: Vec<DecisionLog>,
    /// Final Dirichlet parameters of terrain/water missions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<DirichletParams>,
    pub wall_ms: WallMs,
}

impl TrialResult {
    /// JSON without the wall time, for byte comparisons.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("serializable");
        v.as_object_mut().expect("object").remove("wall_ms");
        v.to_string()
    }
}

/// Generates the map from `cfg.seed` and runs one mission on it.
pub fn run_mission(cfg: &MissionConfig) -> Result<TrialResult, MissionError> {
    cfg.validate()?;
    let world = cfg.world()?;
    run_trial(cfg, &world)
}

/// Runs one mission on a given map.
pub fn run_trial(cfg: &MissionConfig, world: &GroundTruth) -> Result<TrialResult, MissionError> {
    cfg.validate()?;
    let t0 = Instant::now();
    let start = cfg.start_pose(world);
    let goal = cfg.goal_cell(world);
    let g = world.grid();
    for c in std::iter::once(start.cell).chain(goal) {
        if !g.contains(c.x as i64, c.y as i64) {
            return Err(MissionError::Config(format!(
                "cell ({}, {}) is outside the grid",
                c.x, c.y
            )));
        }
    }
    let mut result = match (&cfg.scenario, world) {
        (Scenario::Mars(s), GroundTruth::Mars(w)) => {
            if start.heading.is_none() {
                return Err(MissionError::Config("Mars start poses need a heading".into()));
            }
            let model = Arc::new(MarsModel::new(&w.config, cfg.kernel)?);
            let mut domain = MarsDomain::new(Arc::clone(&model), mars_actions(s.camera_cost, s.uv_cost));
            domain.goal = goal;
            let (depth, width) = w.config.camera_fov;
            let sensors = vec![
                SensorSpec::mars_camera(depth, width, s.camera_cost),
                SensorSpec::mars_uv(s.uv_cost),
            ];
            let mut run = Run {
                cfg,
                domain: &domain,
                world,
                sensors,
                free_start_image: false,
                fixed: Some(FixedPolicy::new(s.camera_cost, s.uv_cost)),
                nss_cost: 0.0,
            };
            let belief = MarsBelief::new(model);
            run.drive(belief, start, goal, |b| b.family("L"), |_| None)?
        }
        (Scenario::Mvp(_) | Scenario::Replay(_), GroundTruth::Mvp(w)) => {
            let (image_error, nss_error, nss_cost, alpha0) = match &cfg.scenario {
                Scenario::Mvp(s) => (s.image_error, s.nss_error, s.nss_cost, s.alpha),
                Scenario::Replay(s) => (s.image_error, s.nss_error, s.nss_cost, s.alpha),
                Scenario::Mars(_) => unreachable!(),
            };
            let model = Arc::new(MvpModel::new(
                w.grid,
                w.n_terrain,
                w.n_water,
                image_error,
                nss_error,
                cfg.kernel,
            )?);
            let mut alpha = DirichletParams::uniform(w.n_water, w.n_terrain, alpha0);
            if let Scenario::Mvp(s) = &cfg.scenario {
                if let PriorKnowledge::Mapping { terrain, boost } = s.prior {
                    alpha.add(s.world.permutation()[terrain], terrain, boost);
                }
            }
            let mut belief = MvpBelief::new(Arc::clone(&model), alpha)?;
            if let Scenario::Mvp(MvpScenario {
                prior: PriorKnowledge::TerrainHint { p },
                ..
            }) = &cfg.scenario
            {
                let off = (1.0 - p) / (w.n_terrain - 1) as f64;
                for c in w.grid.cells() {
                    let t = w.terrain_at(c) as usize;
                    let probs: Vec<f64> = (0..w.n_terrain).map(|k| if k == t { *p } else { off }).collect();
                    belief.set_terrain_prior(c, &probs)?;
                }
            }
            let domain = MvpDomain {
                model,
                actions: mvp_actions(nss_cost),
                goal,
            };
            let sensors = vec![
                SensorSpec::terrain_camera(w.n_terrain, image_error, 1.0),
                SensorSpec::nss(w.n_water, nss_error, nss_cost),
            ];
            let mut run = Run {
                cfg,
                domain: &domain,
                world,
                sensors,
                free_start_image: true,
                fixed: None,
                nss_cost,
            };
            run.drive(belief, start, goal, |b| b.family("W"), |b| Some(b.alpha().clone()))?
        }
        _ => {
            return Err(MissionError::Config(
                "the map does not belong to the configured scenario".into(),
            ))
        }
    };
    result.wall_ms = WallMs(t0.elapsed().as_secs_f64() * 1e3);
    Ok(result)
}

struct Run<'a, D: Domain> {
    cfg: &'a MissionConfig,
    domain: &'a D,
    world: &'a GroundTruth,
    sensors: Vec<SensorSpec>,
    free_start_image: bool,
    fixed: Option<FixedPolicy>,
    nss_cost: f64,
}

trait Observe {
    fn update(&mut self, obs: &Observation) -> Result<(), BeliefError>;
}

impl Observe for MarsBelief {
    fn update(&mut self, obs: &Observation) -> Result<(), BeliefError> {
        MarsBelief::update(self, obs)
    }
}

impl Observe for MvpBelief {
    fn update(&mut self, obs: &Observation) -> Result<(), BeliefError> {
        MvpBelief::update(self, obs)
    }
}

impl<D: Domain> Run<'_, D>
where
    D::Belief: Observe,
{
    fn sense(
        &self,
        belief: &mut D::Belief,
        pose: &Pose,
        sensor: SensorId,
        noise: &mut SimRng,
    ) -> Result<(), MissionError> {
        let spec = self
            .sensors
            .iter()
            .find(|s| s.id == sensor)
            .ok_or_else(|| MissionError::Config(format!("no {sensor:?} sensor in this scenario")))?;
        let obs = observe(self.world, spec, pose, noise)?;
        belief.update(&obs)?;
        Ok(())
    }

    fn drive(
        &mut self,
        mut belief: D::Belief,
        start: Pose,
        goal: Option<Cell>,
        family: impl Fn(&D::Belief) -> Result<crate::belief::FamilyGrid, BeliefError>,
        alpha: impl Fn(&D::Belief) -> Option<DirichletParams>,
    ) -> Result<TrialResult, MissionError> {
        let cfg = self.cfg;
        let d = self.domain;
        let truth = self.world.target();
        let mut noise = stream(cfg.seed, Stream::Noise);
        let mut prng = stream(cfg.seed, Stream::Planner);
        let h0 = d.entropy(&belief);
        let metrics = |b: &D::Belief, spent: f64| -> Result<StepMetrics, MissionError> {
            Ok(StepMetrics {
                budget_spent: spent,
                info_gain_bits: h0 - d.entropy(b),
                recognition: recognition_score(&family(b)?, truth)?,
            })
        };
        let (mut pose, mut remaining, mut spent) = (start, cfg.budget, 0.0);
        let mut queue: Vec<Action> = Vec::new();
        let can_act = d.actions().iter().any(|a| a.cost <= cfg.budget);
        if let (Some(goal), true) = (goal, can_act) {
            if start.cell.manhattan(goal) as f64 > cfg.budget {
                return Err(PlanError::GoalUnreachable(goal).into());
            }
        }
        if self.free_start_image {
            // The terrain camera is always on, so the start cell is imaged
            // for free.
            self.sense(&mut belief, &start, SensorId::TerrainCamera, &mut noise)?;
            if cfg.planner.kind == PlannerKind::Lawnmower && can_act {
                let plan = lawnmower_plan(
                    d.grid(),
                    start.cell,
                    goal.unwrap_or(start.cell),
                    cfg.budget,
                    self.nss_cost,
                )?;
                queue = plan.actions(self.nss_cost);
                queue.reverse();
            }
        }
        let mut trace = vec![metrics(&belief, 0.0)?];
        let mut log = Vec::new();
        loop {
            let (index, action, children) = match cfg.planner.kind {
                PlannerKind::Random => match random_step(d, &pose, remaining, &mut prng) {
                    Ok(i) => (i, d.actions()[i], vec![]),
                    Err(_) => break,
                },
                PlannerKind::Greedy => match greedy_step(d, &belief, &pose, remaining, &cfg.planner, &mut prng) {
                    Ok(r) => (r.action, d.actions()[r.action], r.utilities),
                    Err(_) => break,
                },
                PlannerKind::Mcts => match mcts_step(d, &belief, &pose, remaining, &cfg.planner, &mut prng) {
                    Ok(r) => (r.action, d.actions()[r.action], r.children),
                    Err(_) => break,
                },
                PlannerKind::Fixed => {
                    let policy = self.fixed.as_mut().expect("validated");
                    match policy.step(d, &pose, remaining) {
                        Ok((s, a)) => (s, a, vec![]),
                        Err(_) => break,
                    }
                }
                PlannerKind::Lawnmower => match queue.pop() {
                    Some(a) => {
                        if d.is_feasible(&pose, remaining, &a).is_none() {
                            return Err(MissionError::Config("lawnmower route left the feasible set".into()));
                        }
                        (
                            d.actions().iter().position(|x| *x == a).unwrap_or(usize::MAX),
                            a,
                            vec![],
                        )
                    }
                    None => break,
                },
            };
            let next = d.next_pose(&pose, &action).expect("planners pick feasible actions");
            log.push(DecisionLog {
                step: log.len(),
                pose,
                remaining,
                action: index,
                motion: action.motion,
                sensor: action.sensor,
                children: if cfg.log_decisions { children } else { vec![] },
            });
            pose = next;
            remaining -= action.cost;
            spent += action.cost;
            self.sense(
                &mut belief,
                &sensing_pose(&pose, action.motion),
                action.sensor,
                &mut noise,
            )?;
            trace.push(metrics(&belief, spent)?);
        }
        let last = trace.last().expect("non-empty trace").clone();
        Ok(TrialResult {
            map_id: 0,
            planner: cfg.planner.label(),
            budget: cfg.budget,
            seed: cfg.seed,
            world_checksum: self.world.checksum(),
            start,
            end: pose,
            info_gain_bits: last.info_gain_bits,
            recognition: last.recognition,
            budget_spent: spent,
            trace,
            actions: log,
            alpha: alpha(&belief),
            wall_ms: WallMs::default(),
        })
    }
}
