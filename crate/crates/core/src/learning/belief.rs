use super::{expected_theta, joint_weights, DirichletParams};
use crate::belief::{blend_toward, BeliefError, FamilyGrid, KernelSpec};
use crate::geom::{Cell, GridDims, Pose};
use crate::knowledge::{entropy_bits, normalize_in_place, Dist, Finding};
use crate::rng::{sample_weights, SimRng};
use crate::world::{confusion, mvp_node, CellFinding, Observation, SensorId};
use std::sync::Arc;

/// Sensor models and grid shape the terrain/water belief works with.
#[derive(Clone, Debug, PartialEq)]
pub struct MvpModel {
    pub grid: GridDims,
    pub n_terrain: usize,
    pub n_water: usize,
    /// Row `t`: image reading distribution when the terrain is `t`.
    pub image: Vec<Vec<f64>>,
    /// Row `w`: NSS reading distribution when the water class is `w`.
    pub nss: Vec<Vec<f64>>,
    pub kernel: KernelSpec,
    offsets: Vec<(i64, i64, f64)>,
}

impl MvpModel {
    pub fn new(
        grid: GridDims,
        n_terrain: usize,
        n_water: usize,
        image_error: f64,
        nss_error: f64,
        kernel: KernelSpec,
    ) -> Result<Self, BeliefError> {
        Self::with_confusions(
            grid,
            confusion(n_terrain, image_error),
            confusion(n_water, nss_error),
            kernel,
        )
    }

    pub fn with_confusions(
        grid: GridDims,
        image: Vec<Vec<f64>>,
        nss: Vec<Vec<f64>>,
        kernel: KernelSpec,
    ) -> Result<Self, BeliefError> {
        kernel.validate()?;
        let square = |m: &[Vec<f64>]| m.len() >= 2 && m.iter().all(|r| r.len() == m.len());
        if !square(&image) || !square(&nss) || grid.is_empty() {
            return Err(BeliefError::Dimension(
                "sensor matrices must be square with at least two classes".into(),
            ));
        }
        Ok(MvpModel {
            grid,
            n_terrain: image.len(),
            n_water: nss.len(),
            image,
            nss,
            kernel,
            offsets: kernel.offsets(),
        })
    }
}

fn rescale(v: &mut [f64]) {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

/// Belief over terrain and water with online learning of `theta`.
///
/// Per cell: a terrain prior (which the kernel moves), the accumulated image
/// likelihood over `T` and the accumulated NSS likelihood over `W`. Every
/// cell that has an NSS reading contributes its posterior joint over
/// `(W, T)` to `alpha`, once. That contribution is recomputed whenever the
/// cell's evidence or prior changes, against `alpha` without the cell's own
/// previous contribution, so repeated readings at one cell refine its count
/// instead of stacking new ones. Cells seen only by the camera add no
/// counts: with `E(theta)` coupling them to water, their joint would mostly
/// echo the current `theta` back into `alpha`.
#[derive(Clone, Debug)]
pub struct MvpBelief {
    model: Arc<MvpModel>,
    prior_t: Vec<f64>,
    lam_i: Vec<f64>,
    lam_s: Vec<f64>,
    has_nss: Vec<bool>,
    contrib: Vec<f64>,
    alpha: DirichletParams,
    theta: Vec<f64>,
}

impl MvpBelief {
    pub fn new(model: Arc<MvpModel>, alpha: DirichletParams) -> Result<Self, BeliefError> {
        alpha.validate().map_err(|e| BeliefError::Dimension(e.to_string()))?;
        if alpha.n_water != model.n_water || alpha.n_terrain != model.n_terrain {
            return Err(BeliefError::Dimension("alpha does not match the sensor models".into()));
        }
        let n = model.grid.len();
        let (nt, nw) = (model.n_terrain, model.n_water);
        Ok(MvpBelief {
            prior_t: vec![1.0 / nt as f64; n * nt],
            lam_i: vec![1.0; n * nt],
            lam_s: vec![1.0; n * nw],
            has_nss: vec![false; n],
            contrib: vec![0.0; n * nt * nw],
            theta: expected_theta(&alpha),
            alpha,
            model,
        })
    }

    pub fn model(&self) -> &Arc<MvpModel> {
        &self.model
    }

    pub fn alpha(&self) -> &DirichletParams {
        &self.alpha
    }

    /// `E(theta)`, row-major `[w][t]`.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Replaces a cell's terrain prior, for example from an orbital map.
    pub fn set_terrain_prior(&mut self, c: Cell, probs: &[f64]) -> Result<(), BeliefError> {
        let nt = self.model.n_terrain;
        if probs.len() != nt {
            return Err(BeliefError::Dimension(format!(
                "{} terrain probabilities, expected {nt}",
                probs.len()
            )));
        }
        let i = self.model.grid.index(c);
        let p = &mut self.prior_t[i * nt..(i + 1) * nt];
        p.copy_from_slice(probs);
        normalize_in_place(p);
        self.refresh(i);
        Ok(())
    }

    fn weights(&self, i: usize, out: &mut [f64]) {
        let (nt, nw) = (self.model.n_terrain, self.model.n_water);
        joint_weights(
            &self.prior_t[i * nt..(i + 1) * nt],
            &self.lam_i[i * nt..(i + 1) * nt],
            &self.lam_s[i * nw..(i + 1) * nw],
            &self.theta,
            out,
        );
    }

    /// `P(W, T | Z)` at a cell, row-major `[w][t]`.
    pub fn joint(&self, c: Cell) -> Vec<f64> {
        let mut j = vec![0.0; self.theta.len()];
        self.weights(self.model.grid.index(c), &mut j);
        normalize_in_place(&mut j);
        j
    }

    fn marginals(&self, i: usize, buf: &mut [f64], t_out: &mut [f64], w_out: &mut [f64]) {
        let nt = self.model.n_terrain;
        self.weights(i, buf);
        t_out.iter_mut().for_each(|x| *x = 0.0);
        for (w, row) in buf.chunks(nt).enumerate() {
            w_out[w] = row.iter().sum();
            for (t, x) in row.iter().enumerate() {
                t_out[t] += x;
            }
        }
        normalize_in_place(t_out);
        normalize_in_place(w_out);
    }

    pub fn water(&self, c: Cell) -> Dist {
        let (nt, nw) = (self.model.n_terrain, self.model.n_water);
        let (mut buf, mut t, mut w) = (vec![0.0; nt * nw], vec![0.0; nt], vec![0.0; nw]);
        self.marginals(self.model.grid.index(c), &mut buf, &mut t, &mut w);
        Dist::from_normalized(w)
    }

    pub fn terrain(&self, c: Cell) -> Dist {
        let (nt, nw) = (self.model.n_terrain, self.model.n_water);
        let (mut buf, mut t, mut w) = (vec![0.0; nt * nw], vec![0.0; nt], vec![0.0; nw]);
        self.marginals(self.model.grid.index(c), &mut buf, &mut t, &mut w);
        Dist::from_normalized(t)
    }

    /// Total water entropy in bits.
    pub fn water_entropy(&self) -> f64 {
        let (nt, nw) = (self.model.n_terrain, self.model.n_water);
        let mut buf = vec![0.0; nt * nw];
        let mut w = vec![0.0; nw];
        let mut h = 0.0;
        for i in 0..self.model.grid.len() {
            self.weights(i, &mut buf);
            for (wk, row) in w.iter_mut().zip(buf.chunks(nt)) {
                *wk = row.iter().sum();
            }
            normalize_in_place(&mut w);
            h += entropy_bits(&w);
        }
        h
    }

    /// `T` or `W` over the grid.
    pub fn family(&self, id: &str) -> Result<FamilyGrid, BeliefError> {
        let m = &self.model;
        let (nt, nw) = (m.n_terrain, m.n_water);
        let water = match id {
            "W" => true,
            "T" => false,
            _ => return Err(BeliefError::UnknownFamily(id.to_string())),
        };
        let (mut buf, mut t, mut w) = (vec![0.0; nt * nw], vec![0.0; nt], vec![0.0; nw]);
        let mut probs = Vec::new();
        for i in 0..m.grid.len() {
            self.marginals(i, &mut buf, &mut t, &mut w);
            probs.extend_from_slice(if water { &w } else { &t });
        }
        Ok(FamilyGrid {
            dims: m.grid,
            cardinality: if water { nw } else { nt },
            probs,
        })
    }

    /// Recomputes cell `i`'s count in `alpha`.
    fn refresh(&mut self, i: usize) {
        if !self.has_nss[i] {
            return;
        }
        let k = self.theta.len();
        let own = i * k..(i + 1) * k;
        for (a, c) in self.alpha.alpha.iter_mut().zip(&self.contrib[own.clone()]) {
            *a = (*a - c).max(1e-12);
        }
        self.theta = expected_theta(&self.alpha);
        let mut joint = vec![0.0; k];
        self.weights(i, &mut joint);
        normalize_in_place(&mut joint);
        for (a, j) in self.alpha.alpha.iter_mut().zip(&joint) {
            *a += j;
        }
        self.contrib[own].copy_from_slice(&joint);
        self.theta = expected_theta(&self.alpha);
    }

    fn likelihood(&self, obs_node: usize, f: &Finding) -> Result<Vec<f64>, BeliefError> {
        let m = &self.model;
        let table = if obs_node == mvp_node::IMAGE { &m.image } else { &m.nss };
        match f {
            Finding::Hard(z) if *z < table.len() => Ok(table.iter().map(|row| row[*z]).collect()),
            Finding::Soft(v) if v.len() == table.len() && v.iter().all(|&x| x >= 0.0) && v.iter().any(|&x| x > 0.0) => {
                Ok(v.clone())
            }
            _ => Err(BeliefError::Finding(format!(
                "reading {f:?} does not fit a {}-class sensor",
                table.len()
            ))),
        }
    }

    pub fn update(&mut self, obs: &Observation) -> Result<(), BeliefError> {
        let m = Arc::clone(&self.model);
        let (nt, nw) = (m.n_terrain, m.n_water);
        for f in &obs.findings {
            if f.cell.x >= m.grid.width || f.cell.y >= m.grid.height {
                return Err(BeliefError::Dimension(format!(
                    "finding at ({}, {}) outside the grid",
                    f.cell.x, f.cell.y
                )));
            }
            if f.node != mvp_node::IMAGE && f.node != mvp_node::NSS {
                return Err(BeliefError::Finding(format!(
                    "node {} is not a terrain/water reading",
                    f.node
                )));
            }
            let lik = self.likelihood(f.node, &f.finding)?;
            let i = m.grid.index(f.cell);
            if f.node == mvp_node::NSS {
                let ls = &mut self.lam_s[i * nw..(i + 1) * nw];
                ls.iter_mut().zip(&lik).for_each(|(a, b)| *a *= b);
                rescale(ls);
                self.has_nss[i] = true;
                self.refresh(i);
                continue;
            }
            let li = &mut self.lam_i[i * nt..(i + 1) * nt];
            li.iter_mut().zip(&lik).for_each(|(a, b)| *a *= b);
            rescale(li);
            self.refresh(i);
            for &(dx, dy, w) in &m.offsets {
                if let Some(n) = m.grid.offset(f.cell, dx, dy) {
                    let j = m.grid.index(n);
                    blend_toward(&mut self.prior_t[j * nt..(j + 1) * nt], &lik, w);
                    self.refresh(j);
                }
            }
        }
        Ok(())
    }

    /// Draws a reading of `sensor` at `pose` from the belief's predictive
    /// distribution through the nominal sensor models.
    pub fn sample_observation(&self, sensor: SensorId, pose: &Pose, rng: &mut SimRng) -> Observation {
        let m = &self.model;
        let (nt, nw) = (m.n_terrain, m.n_water);
        let (mut buf, mut t, mut w) = (vec![0.0; nt * nw], vec![0.0; nt], vec![0.0; nw]);
        self.marginals(m.grid.index(pose.cell), &mut buf, &mut t, &mut w);
        let (node, z) = if sensor == SensorId::Nss {
            let wv = sample_weights(rng, &w);
            (mvp_node::NSS, sample_weights(rng, &m.nss[wv]))
        } else {
            let tv = sample_weights(rng, &t);
            (mvp_node::IMAGE, sample_weights(rng, &m.image[tv]))
        };
        Observation {
            sensor,
            pose: *pose,
            findings: vec![CellFinding {
                cell: pose.cell,
                node,
                finding: Finding::Hard(z),
            }],
        }
    }

    pub fn simulate(&mut self, sensor: SensorId, pose: &Pose, rng: &mut SimRng) {
        let obs = self.sample_observation(sensor, pose, rng);
        self.update(&obs).expect("sampled readings fit the model");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::recognition_score;
    use crate::learning::{joint_posterior, posterior_water};
    use crate::rng::{stream, Stream};
    use crate::world::{gen_voronoi_world, observe, GroundTruth, MvpWorldConfig, SensorSpec};
    use approx::assert_abs_diff_eq;

    fn model(kernel: KernelSpec) -> Arc<MvpModel> {
        Arc::new(MvpModel::new(GridDims::new(5, 5), 3, 3, 0.1, 0.05, kernel).unwrap())
    }

    fn reading(c: Cell, node: usize, z: usize) -> Observation {
        Observation {
            sensor: if node == mvp_node::NSS {
                SensorId::Nss
            } else {
                SensorId::TerrainCamera
            },
            pose: Pose::at(c.x, c.y),
            findings: vec![CellFinding {
                cell: c,
                node,
                finding: Finding::Hard(z),
            }],
        }
    }

    #[test]
    fn uniform_start() {
        let b = MvpBelief::new(model(KernelSpec::default()), DirichletParams::uniform(3, 3, 1.0)).unwrap();
        assert_abs_diff_eq!(b.water_entropy(), 25.0 * 3f64.log2(), epsilon = 1e-9);
        let w = b.family("W").unwrap();
        assert_abs_diff_eq!(recognition_score(&w, &[2; 25]).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert!(b.family("X").is_err());
    }

    #[test]
    fn single_cell_matches_closed_form() {
        let mut b = MvpBelief::new(model(KernelSpec::off()), DirichletParams::uniform(3, 3, 1.0)).unwrap();
        let c = Cell::new(2, 2);
        b.update(&reading(c, mvp_node::IMAGE, 0)).unwrap();
        // Without NSS evidence alpha stays put.
        assert_eq!(b.alpha(), &DirichletParams::uniform(3, 3, 1.0));
        b.update(&reading(c, mvp_node::NSS, 2)).unwrap();
        let img = [0.9, 0.05, 0.05];
        let nss = [0.025, 0.025, 0.95];
        let prior = DirichletParams::uniform(3, 3, 1.0);
        let joint = joint_posterior(&[1.0 / 3.0; 3], &img, &nss, &prior).unwrap();
        for (a, j) in b.alpha().alpha.iter().zip(&joint) {
            assert_abs_diff_eq!(*a, 1.0 + j, epsilon = 1e-12);
        }
        let want = posterior_water(&[1.0 / 3.0; 3], &img, &nss, b.alpha()).unwrap();
        assert!(b.water(c).max_abs_diff(&want) < 1e-12);
        // A second NSS reading at the same cell replaces the count.
        b.update(&reading(c, mvp_node::NSS, 2)).unwrap();
        assert_abs_diff_eq!(b.alpha().alpha.iter().sum::<f64>(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn image_kernel_moves_neighbour_terrain_only() {
        let mut b = MvpBelief::new(model(KernelSpec::default()), DirichletParams::uniform(3, 3, 1.0)).unwrap();
        b.update(&reading(Cell::new(2, 2), mvp_node::IMAGE, 1)).unwrap();
        let near = b.terrain(Cell::new(3, 2));
        let far = b.terrain(Cell::new(0, 0));
        assert!(near[1] > 0.4);
        assert_abs_diff_eq!(far[1], 1.0 / 3.0, epsilon = 1e-12);
        b.update(&reading(Cell::new(2, 2), mvp_node::NSS, 0)).unwrap();
        // Water at the neighbour follows only from its terrain through theta.
        let n = Cell::new(3, 2);
        let want = posterior_water(b.terrain(n).probs(), &[1.0; 3], &[1.0; 3], b.alpha()).unwrap();
        assert!(b.water(n).max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn learns_the_mapping_from_a_mission_worth_of_readings() {
        let cfg = MvpWorldConfig {
            seed: 4,
            ..Default::default()
        };
        let w = gen_voronoi_world(&cfg).unwrap();
        let gt = GroundTruth::Mvp(w);
        let m = Arc::new(MvpModel::new(cfg.grid, 3, 3, 0.1, 0.05, KernelSpec::default()).unwrap());
        let mut b = MvpBelief::new(m, DirichletParams::uniform(3, 3, 1.0)).unwrap();
        let cam = SensorSpec::terrain_camera(3, 0.1, 1.0);
        let nss = SensorSpec::nss(3, 0.05, 5.0);
        let mut rng = stream(2, Stream::Noise);
        let mut counts = [[0; 3]; 3];
        for c in cfg.grid.cells().step_by(3) {
            let GroundTruth::Mvp(w) = &gt else { unreachable!() };
            counts[w.terrain_at(c) as usize][w.water_at(c) as usize] += 1;
        }
        let h0 = b.water_entropy();
        for c in cfg.grid.cells().step_by(3) {
            let pose = Pose::at(c.x, c.y);
            b.update(&observe(&gt, &cam, &pose, &mut rng).unwrap()).unwrap();
            b.update(&observe(&gt, &nss, &pose, &mut rng).unwrap()).unwrap();
        }
        assert!(b.water_entropy() < h0);
        let th = b.theta();
        for t in (0..3).filter(|&t| counts[t].iter().sum::<usize>() > 20) {
            assert!(th[(2 - t) * 3 + t] > 0.6, "theta {th:?}");
        }
        let fam = b.family("W").unwrap();
        assert!(recognition_score(&fam, gt.target()).unwrap() > 0.6);
    }

    #[test]
    fn soft_and_bad_findings() {
        let mut b = MvpBelief::new(model(KernelSpec::off()), DirichletParams::uniform(3, 3, 1.0)).unwrap();
        let c = Cell::new(1, 1);
        let soft = Observation {
            sensor: SensorId::TerrainCamera,
            pose: Pose::at(1, 1),
            findings: vec![CellFinding {
                cell: c,
                node: mvp_node::IMAGE,
                finding: Finding::Soft(vec![0.2, 0.6, 0.2]),
            }],
        };
        b.update(&soft).unwrap();
        assert_abs_diff_eq!(b.terrain(c)[1], 0.6, epsilon = 1e-12);
        assert!(b.update(&reading(c, mvp_node::IMAGE, 3)).is_err());
        assert!(b.update(&reading(Cell::new(9, 9), mvp_node::IMAGE, 0)).is_err());
        assert!(b.update(&reading(c, mvp_node::TERRAIN, 0)).is_err());
    }

    #[test]
    fn sampled_readings_stay_normalized() {
        let mut b = MvpBelief::new(model(KernelSpec::default()), DirichletParams::uniform(3, 3, 1.0)).unwrap();
        let mut rng = stream(5, Stream::Planner);
        for k in 0..200usize {
            let pose = Pose::at(k % 5, (k / 5) % 5);
            let s = if k % 4 == 0 {
                SensorId::Nss
            } else {
                SensorId::TerrainCamera
            };
            b.simulate(s, &pose, &mut rng);
        }
        let w = b.family("W").unwrap();
        for c in w.probs.chunks(3) {
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(b.alpha().validate().is_ok());
    }
}
