use super::{blend_toward, BeliefError, FamilyGrid, KernelSpec};
use crate::geom::{Cell, GridDims, Heading, Pose};
use crate::knowledge::{entropy_bits, normalize_in_place, Dist, Finding};
use crate::rng::{sample_weights, SimRng};
use crate::world::{CameraFootprint, CellFinding, MarsNet, MarsWorldConfig, Observation, SensorId};
use rand::Rng;
use smallvec::SmallVec;
use std::collections::HashMap;
use std::sync::Arc;

type Small = SmallVec<[f64; 8]>;

/// Everything about the Mars scenario a belief needs and the robot is
/// allowed to know: the geology network, grid geometry, rock density, the
/// camera footprint and the kernel.
#[derive(Clone, Debug)]
pub struct MarsModel {
    pub net: MarsNet,
    pub loc: GridDims,
    pub rock_grid: GridDims,
    pub scale: usize,
    pub density: f64,
    pub footprint: CameraFootprint,
    pub kernel: KernelSpec,
    offsets: Vec<(i64, i64, f64)>,
    n_l: usize,
    n_r: usize,
    n_b: usize,
    lam_off: Vec<usize>,
    lam_len: usize,
    /// Feature index of each network node that is a camera reading.
    z_to_k: Vec<Option<usize>>,
}

impl MarsModel {
    pub fn new(cfg: &MarsWorldConfig, kernel: KernelSpec) -> Result<Self, BeliefError> {
        cfg.validate().map_err(|e| BeliefError::Finding(e.to_string()))?;
        kernel.validate()?;
        let net = cfg.network().map_err(|e| BeliefError::Finding(e.to_string()))?;
        let t = &net.net;
        let mut lam_off = Vec::new();
        let mut lam_len = 0;
        for &fk in &net.f {
            lam_off.push(lam_len);
            lam_len += t.cardinality(fk);
        }
        let mut z_to_k = vec![None; t.len()];
        for (k, &zk) in net.z.iter().enumerate() {
            z_to_k[zk] = Some(k);
        }
        Ok(MarsModel {
            n_l: t.cardinality(net.l),
            n_r: t.cardinality(net.r),
            n_b: t.cardinality(net.b),
            net,
            loc: cfg.loc_grid,
            rock_grid: cfg.rock_grid,
            scale: cfg.scale(),
            density: cfg.rock_density,
            footprint: CameraFootprint::new(cfg),
            kernel,
            offsets: kernel.offsets(),
            lam_off,
            lam_len,
            z_to_k,
        })
    }

    fn p(&self, node: usize, parent: usize) -> &[f64] {
        self.net.row(node, parent)
    }

    /// Rock subtree message to `L`: `sum_r P(r|l) prod_k sum_f P(f|r) lam_k(f)`.
    fn rock_message(&self, lam: &[f64]) -> Small {
        let mu = self.feature_messages(lam);
        (0..self.n_l)
            .map(|l| self.p(self.net.r, l).iter().zip(&mu).map(|(p, m)| p * m).sum())
            .collect()
    }

    /// `prod_k sum_f P(f|r) lam_k(f)` for every rock class `r`.
    fn feature_messages(&self, lam: &[f64]) -> Small {
        (0..self.n_r)
            .map(|r| {
                self.net
                    .f
                    .iter()
                    .enumerate()
                    .map(|(k, &fk)| {
                        let lk = &lam[self.lam_off[k]..];
                        self.p(fk, r).iter().zip(lk).map(|(p, l)| p * l).sum::<f64>()
                    })
                    .product()
            })
            .collect()
    }

    fn uv_message(&self, lam_b: &[f64]) -> Small {
        (0..self.n_l)
            .map(|l| self.p(self.net.b, l).iter().zip(lam_b).map(|(p, x)| p * x).sum())
            .collect()
    }

    /// Likelihood over the parent of `node` implied by `finding` on `node`.
    fn reading_message(&self, node: usize, finding: &Finding) -> Result<Small, BeliefError> {
        let t = &self.net.net;
        let card = t.cardinality(node);
        let parent = t.parent(node).expect("reading nodes have parents");
        let ev: Small = match finding {
            Finding::Hard(z) if *z < card => (0..card).map(|i| (i == *z) as u8 as f64).collect(),
            Finding::Soft(v) if v.len() == card => v.iter().copied().collect(),
            _ => {
                return Err(BeliefError::Finding(format!(
                    "finding on `{}` does not match its {card} categories",
                    t.id(node)
                )))
            }
        };
        Ok((0..t.cardinality(parent))
            .map(|pv| self.p(node, pv).iter().zip(&ev).map(|(p, e)| p * e).sum())
            .collect())
    }

    pub fn loc_cell(&self, rock_cell: Cell) -> Cell {
        Cell::new(rock_cell.x / self.scale, rock_cell.y / self.scale)
    }
}

fn rescale(v: &mut [f64]) {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m > 0.0 && m.is_finite() {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

/// Belief over the Mars world.
///
/// Each location cell keeps a prior over `L` and the product of the messages
/// its readings sent to `L`. Each discovered rock keeps the accumulated
/// likelihood of its camera readings over every feature, and each location
/// cell keeps the accumulated UV likelihood over `B`. A new reading multiplies
/// the cell's message by the ratio of the new to the old subtree message,
/// which is exact inference for a cell holding several rocks. The kernel
/// blends neighbouring priors towards that ratio.
#[derive(Clone, Debug)]
pub struct MarsBelief {
    model: Arc<MarsModel>,
    prior: Vec<f64>,
    msg: Vec<f64>,
    bel: Vec<f64>,
    ent: Vec<f64>,
    lam_b: Vec<f64>,
    seen: Vec<u64>,
    slots: HashMap<u32, u32>,
    lam: Vec<f64>,
}

impl MarsBelief {
    /// Every cell starts at the network's root prior; no rock cell has been seen.
    pub fn new(model: Arc<MarsModel>) -> Self {
        let n = model.loc.len();
        let prior = model.net.net.prior().to_vec();
        let h = entropy_bits(&prior);
        let bel: Vec<f64> = prior.iter().copied().cycle().take(n * model.n_l).collect();
        MarsBelief {
            prior: bel.clone(),
            msg: vec![1.0; bel.len()],
            bel,
            ent: vec![h; n],
            lam_b: vec![1.0; n * model.n_b],
            seen: vec![0; model.rock_grid.len().div_ceil(64)],
            slots: HashMap::new(),
            lam: Vec::new(),
            model,
        }
    }

    pub fn model(&self) -> &Arc<MarsModel> {
        &self.model
    }

    pub fn location(&self, c: Cell) -> &[f64] {
        let i = self.model.loc.index(c);
        &self.bel[i * self.model.n_l..(i + 1) * self.model.n_l]
    }

    /// Replaces one cell's prior over `L`.
    pub fn set_prior(&mut self, c: Cell, probs: &[f64]) {
        let n_l = self.model.n_l;
        let i = self.model.loc.index(c);
        let cell = &mut self.prior[i * n_l..(i + 1) * n_l];
        cell.copy_from_slice(probs);
        normalize_in_place(cell);
        self.refresh(i);
    }

    fn refresh(&mut self, i: usize) {
        let n_l = self.model.n_l;
        let r = i * n_l..(i + 1) * n_l;
        let bel = &mut self.bel[r.clone()];
        for ((b, p), m) in bel.iter_mut().zip(&self.prior[r.clone()]).zip(&self.msg[r]) {
            *b = p * m;
        }
        normalize_in_place(bel);
        self.ent[i] = entropy_bits(bel);
    }

    pub fn is_seen(&self, rock_cell: Cell) -> bool {
        let i = self.model.rock_grid.index(rock_cell);
        self.seen[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn seen_count(&self) -> usize {
        self.seen.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn rock_count(&self) -> usize {
        self.slots.len()
    }

    /// Total entropy of the location grid in bits.
    pub fn total_entropy(&self) -> f64 {
        self.ent.iter().sum()
    }

    pub fn family(&self, id: &str) -> Result<FamilyGrid, BeliefError> {
        let m = &self.model;
        match id {
            "L" => Ok(FamilyGrid {
                dims: m.loc,
                cardinality: m.n_l,
                probs: self.bel.clone(),
            }),
            "B" => {
                let mut probs = Vec::with_capacity(m.loc.len() * m.n_b);
                for i in 0..m.loc.len() {
                    probs.extend_from_slice(self.uv_posterior(i).probs());
                }
                Ok(FamilyGrid {
                    dims: m.loc,
                    cardinality: m.n_b,
                    probs,
                })
            }
            _ => Err(BeliefError::UnknownFamily(id.to_string())),
        }
    }

    fn bel_at(&self, i: usize) -> &[f64] {
        &self.bel[i * self.model.n_l..(i + 1) * self.model.n_l]
    }

    /// `P(B | evidence)` at location cell `i`.
    fn uv_posterior(&self, i: usize) -> Dist {
        let m = &self.model;
        let lam_b = &self.lam_b[i * m.n_b..(i + 1) * m.n_b];
        let msg = m.uv_message(lam_b);
        let mut w = vec![0.0; m.n_b];
        for (l, (&bl, &ml)) in self.bel_at(i).iter().zip(&msg).enumerate() {
            if ml > 0.0 {
                for (wb, p) in w.iter_mut().zip(m.p(m.net.b, l)) {
                    *wb += bl / ml * p;
                }
            }
        }
        for (wb, lb) in w.iter_mut().zip(lam_b) {
            *wb *= lb;
        }
        Dist::from_weights(w)
    }

    /// Posterior over the class of a discovered rock.
    pub fn rock_class(&self, rock_cell: Cell) -> Option<Dist> {
        let m = &self.model;
        let slot = *self.slots.get(&(m.rock_grid.index(rock_cell) as u32))? as usize;
        let lam = &self.lam[slot * m.lam_len..(slot + 1) * m.lam_len];
        let mu = m.feature_messages(lam);
        let msg = m.rock_message(lam);
        let bel = self.bel_at(m.loc.index(m.loc_cell(rock_cell)));
        let mut w: Vec<f64> = vec![0.0; m.n_r];
        for l in 0..m.n_l {
            if msg[l] > 0.0 {
                for (r, wr) in w.iter_mut().enumerate() {
                    *wr += bel[l] / msg[l] * m.p(m.net.r, l)[r];
                }
            }
        }
        for (wr, u) in w.iter_mut().zip(&mu) {
            *wr *= u;
        }
        Some(Dist::from_weights(w))
    }

    fn mark_seen(&mut self, from: Cell, view: Heading) {
        let m = Arc::clone(&self.model);
        let s = m.scale as i64;
        let (bx, by) = (from.x as i64 * s, from.y as i64 * s);
        for &(dx, dy) in m.footprint.offsets(view) {
            let (x, y) = (bx + dx as i64, by + dy as i64);
            if m.rock_grid.contains(x, y) {
                let i = y as usize * m.rock_grid.width + x as usize;
                self.seen[i / 64] |= 1 << (i % 64);
            }
        }
    }

    /// Multiplies cell `i`'s message by `lambda` and blends its neighbours'
    /// priors towards the same update.
    fn apply_likelihood(&mut self, i: usize, lambda: &[f64]) {
        let m = Arc::clone(&self.model);
        let n_l = m.n_l;
        let msg = &mut self.msg[i * n_l..(i + 1) * n_l];
        for (x, l) in msg.iter_mut().zip(lambda) {
            *x *= l;
        }
        rescale(msg);
        self.refresh(i);
        let c = m.loc.cell(i);
        for &(dx, dy, w) in &m.offsets {
            if let Some(n) = m.loc.offset(c, dx, dy) {
                let j = m.loc.index(n);
                blend_toward(&mut self.prior[j * n_l..(j + 1) * n_l], lambda, w);
                self.refresh(j);
            }
        }
    }

    pub fn update(&mut self, obs: &Observation) -> Result<(), BeliefError> {
        let m = Arc::clone(&self.model);
        let pose = obs.pose;
        if pose.cell.x >= m.loc.width || pose.cell.y >= m.loc.height {
            return Err(BeliefError::Dimension("pose outside the location grid".into()));
        }
        match obs.sensor {
            SensorId::Camera => self.apply_camera(&m, pose, &obs.findings),
            SensorId::Uv => self.apply_uv(&m, pose, &obs.findings),
            other => Err(BeliefError::Finding(format!(
                "{other:?} readings do not apply to the Mars belief"
            ))),
        }
    }

    fn apply_camera(&mut self, m: &MarsModel, pose: Pose, findings: &[CellFinding]) -> Result<(), BeliefError> {
        let view = pose
            .heading
            .ok_or_else(|| BeliefError::Finding("camera observation without a heading".into()))?;
        for f in findings {
            if f.cell.x >= m.rock_grid.width
                || f.cell.y >= m.rock_grid.height
                || !m.footprint.contains(pose.cell, view, f.cell)
            {
                return Err(BeliefError::Dimension(format!(
                    "rock cell ({}, {}) is outside the camera footprint",
                    f.cell.x, f.cell.y
                )));
            }
            if m.z_to_k.get(f.node).copied().flatten().is_none() {
                return Err(BeliefError::Finding(format!("node {} is not a camera reading", f.node)));
            }
        }
        self.mark_seen(pose.cell, view);
        let mut groups: SmallVec<[(usize, Small); 16]> = SmallVec::new();
        let mut start = 0;
        while start < findings.len() {
            let cell = findings[start].cell;
            let end = start + findings[start..].iter().take_while(|f| f.cell == cell).count();
            let ratio = self.observe_rock(m, cell, &findings[start..end])?;
            let li = m.loc.index(m.loc_cell(cell));
            match groups.iter_mut().find(|(i, _)| *i == li) {
                Some((_, acc)) => {
                    for (a, r) in acc.iter_mut().zip(&ratio) {
                        *a *= r;
                    }
                    rescale(acc);
                }
                None => groups.push((li, ratio)),
            }
            start = end;
        }
        for (i, lambda) in groups {
            self.apply_likelihood(i, &lambda);
        }
        Ok(())
    }

    /// Folds one rock's readings into its feature likelihoods and returns the
    /// change of its message to the location node.
    fn observe_rock(&mut self, m: &MarsModel, cell: Cell, findings: &[CellFinding]) -> Result<Small, BeliefError> {
        let key = m.rock_grid.index(cell) as u32;
        let next = self.slots.len() as u32;
        let slot = *self.slots.entry(key).or_insert(next) as usize;
        if slot == self.lam.len() / m.lam_len.max(1) {
            self.lam.extend(std::iter::repeat_n(1.0, m.lam_len));
        }
        let range = slot * m.lam_len..(slot + 1) * m.lam_len;
        let old = m.rock_message(&self.lam[range.clone()]);
        for f in findings {
            let k = m.z_to_k[f.node].expect("checked");
            let msg = m.reading_message(f.node, &f.finding)?;
            let lk = &mut self.lam[range.start + m.lam_off[k]..range.start + m.lam_off[k] + msg.len()];
            for (l, x) in lk.iter_mut().zip(&msg) {
                *l *= x;
            }
            rescale(lk);
        }
        let new = m.rock_message(&self.lam[range]);
        Ok(ratio(&new, &old))
    }

    fn apply_uv(&mut self, m: &MarsModel, pose: Pose, findings: &[CellFinding]) -> Result<(), BeliefError> {
        let i = m.loc.index(pose.cell);
        for f in findings {
            if f.cell != pose.cell || f.node != m.net.u {
                return Err(BeliefError::Finding(
                    "UV readings must be on `U` at the robot's cell".into(),
                ));
            }
            let msg = m.reading_message(f.node, &f.finding)?;
            let lam_b = &mut self.lam_b[i * m.n_b..(i + 1) * m.n_b];
            let old = m.uv_message(lam_b);
            for (l, x) in lam_b.iter_mut().zip(&msg) {
                *l *= x;
            }
            rescale(lam_b);
            let new = m.uv_message(lam_b);
            self.apply_likelihood(i, &ratio(&new, &old));
        }
        Ok(())
    }

    /// Draws a reading from the belief's predictive distribution: rock
    /// presence at unseen cells from the rock density, classes and features
    /// from the network given the current evidence.
    pub fn sample_observation(&self, sensor: SensorId, pose: &Pose, rng: &mut SimRng) -> Observation {
        let m = &*self.model;
        let mut findings = Vec::new();
        match sensor {
            SensorId::Camera => {
                let view = pose.heading.unwrap_or(Heading::EAST);
                let s = m.scale as i64;
                let (bx, by) = (pose.cell.x as i64 * s, pose.cell.y as i64 * s);
                let mut locs: SmallVec<[(usize, usize); 16]> = SmallVec::new();
                for &(dx, dy) in m.footprint.offsets(view) {
                    let (x, y) = (bx + dx as i64, by + dy as i64);
                    if !m.rock_grid.contains(x, y) {
                        continue;
                    }
                    let cell = Cell::new(x as usize, y as usize);
                    let ri = m.rock_grid.index(cell);
                    let slot = if self.seen[ri / 64] >> (ri % 64) & 1 == 1 {
                        match self.slots.get(&(ri as u32)) {
                            Some(&s) => Some(s as usize),
                            None => continue,
                        }
                    } else if rng.random::<f64>() < m.density {
                        None
                    } else {
                        continue;
                    };
                    let li = m.loc.index(m.loc_cell(cell));
                    let l = match locs.iter().find(|(i, _)| *i == li) {
                        Some(&(_, l)) => l,
                        None => {
                            let l = sample_weights(rng, self.bel_at(li));
                            locs.push((li, l));
                            l
                        }
                    };
                    self.sample_rock(m, slot, l, cell, rng, &mut findings);
                }
            }
            SensorId::Uv => {
                let i = m.loc.index(pose.cell);
                let l = sample_weights(rng, self.bel_at(i));
                let lam_b = &self.lam_b[i * m.n_b..(i + 1) * m.n_b];
                let w: Small = m.p(m.net.b, l).iter().zip(lam_b).map(|(p, x)| p * x).collect();
                let b = sample_weights(rng, &w);
                let u = sample_weights(rng, m.p(m.net.u, b));
                findings.push(CellFinding {
                    cell: pose.cell,
                    node: m.net.u,
                    finding: Finding::Hard(u),
                });
            }
            _ => {}
        }
        Observation {
            sensor,
            pose: *pose,
            findings,
        }
    }

    fn sample_rock(
        &self,
        m: &MarsModel,
        slot: Option<usize>,
        l: usize,
        cell: Cell,
        rng: &mut SimRng,
        out: &mut Vec<CellFinding>,
    ) {
        let lam = slot.map(|s| &self.lam[s * m.lam_len..(s + 1) * m.lam_len]);
        let r = match lam {
            Some(lam) => {
                let mu = m.feature_messages(lam);
                let w: Small = m.p(m.net.r, l).iter().zip(&mu).map(|(p, u)| p * u).collect();
                sample_weights(rng, &w)
            }
            None => sample_weights(rng, m.p(m.net.r, l)),
        };
        for (k, (&fk, &zk)) in m.net.f.iter().zip(&m.net.z).enumerate() {
            let f = match lam {
                Some(lam) => {
                    let lk = &lam[m.lam_off[k]..];
                    let w: Small = m.p(fk, r).iter().zip(lk).map(|(p, x)| p * x).collect();
                    sample_weights(rng, &w)
                }
                None => sample_weights(rng, m.p(fk, r)),
            };
            let z = sample_weights(rng, m.p(zk, f));
            out.push(CellFinding {
                cell,
                node: zk,
                finding: Finding::Hard(z),
            });
        }
    }

    /// Samples a reading and folds it in, as planners do during lookahead.
    pub fn simulate(&mut self, sensor: SensorId, pose: &Pose, rng: &mut SimRng) {
        let obs = self.sample_observation(sensor, pose, rng);
        self.update(&obs).expect("sampled readings fit the model");
    }
}

fn ratio(new: &[f64], old: &[f64]) -> Small {
    let mut r: Small = new
        .iter()
        .zip(old)
        .map(|(n, o)| if *o > 0.0 { n / o } else { 0.0 })
        .collect();
    rescale(&mut r);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{Evidence, NodeSpec, TreeNet};
    use crate::rng::{stream, Stream};
    use approx::assert_abs_diff_eq;

    fn model(kernel: KernelSpec) -> Arc<MarsModel> {
        let cfg = MarsWorldConfig {
            loc_grid: GridDims::new(4, 4),
            region_block: 2,
            rock_grid: GridDims::new(80, 80),
            ..MarsWorldConfig::default()
        };
        Arc::new(MarsModel::new(&cfg, kernel).unwrap())
    }

    fn reading(m: &MarsModel, cell: Cell, zs: &[usize]) -> Vec<CellFinding> {
        zs.iter()
            .enumerate()
            .map(|(k, &z)| CellFinding {
                cell,
                node: m.net.z[k],
                finding: Finding::Hard(z),
            })
            .collect()
    }

    /// The cell network with one `R -> F` branch per rock and one `Z` node
    /// per reading: rock `i` is read `rounds[i]` times.
    fn expanded(m: &MarsModel, rounds: &[usize]) -> TreeNet {
        let specs = m.net.net.to_specs();
        let get = |id: &str| specs.iter().find(|s| s.id == id).unwrap().clone();
        let mut out = vec![get("L"), get("B"), get("U")];
        for (i, &n) in rounds.iter().enumerate() {
            let mut r = get("R");
            r.id = format!("R{i}");
            out.push(r);
            for k in 1..=m.net.f.len() {
                let mut f = get(&format!("F{k}"));
                f.id = format!("F{k}_{i}");
                f.parent = Some(format!("R{i}"));
                out.push(f);
                for j in 0..n {
                    let mut z = get(&format!("Z{k}"));
                    z.id = format!("Z{k}_{i}_{j}");
                    z.parent = Some(format!("F{k}_{i}"));
                    out.push(z);
                }
            }
        }
        TreeNet::new(out).unwrap()
    }

    #[test]
    fn two_rocks_and_uv_match_the_expanded_network() {
        let m = model(KernelSpec::off());
        let mut b = MarsBelief::new(Arc::clone(&m));
        let pose = Pose::facing(1, 1, Heading::EAST);
        // Two rocks in location cell (2, 1), seen twice and once.
        let r0 = Cell::new(41, 25);
        let r1 = Cell::new(45, 28);
        let mut f = reading(&m, r0, &[0, 2, 0]);
        f.extend(reading(&m, r1, &[1, 1, 1]));
        b.update(&Observation {
            sensor: SensorId::Camera,
            pose,
            findings: f,
        })
        .unwrap();
        let f = reading(&m, r0, &[0, 0, 1]);
        b.update(&Observation {
            sensor: SensorId::Camera,
            pose,
            findings: f,
        })
        .unwrap();
        let uv = vec![CellFinding {
            cell: Cell::new(2, 1),
            node: m.net.u,
            finding: Finding::Hard(2),
        }];
        b.update(&Observation {
            sensor: SensorId::Uv,
            pose: Pose::facing(2, 1, Heading::EAST),
            findings: uv,
        })
        .unwrap();

        let net = expanded(&m, &[2, 1]);
        let ev = vec![
            Evidence::hard("Z1_0_0", 0),
            Evidence::hard("Z2_0_0", 2),
            Evidence::hard("Z3_0_0", 0),
            Evidence::hard("Z1_0_1", 0),
            Evidence::hard("Z2_0_1", 0),
            Evidence::hard("Z3_0_1", 1),
            Evidence::hard("Z1_1_0", 1),
            Evidence::hard("Z2_1_0", 1),
            Evidence::hard("Z3_1_0", 1),
            Evidence::hard("U", 2),
        ];
        let want = net.posterior("L", &ev).unwrap();
        let got = b.location(Cell::new(2, 1));
        for l in 0..3 {
            assert_abs_diff_eq!(got[l], want[l], epsilon = 1e-9);
        }
        let rock = b.rock_class(r0).unwrap();
        let want_r = net.posterior("R0", &ev).unwrap();
        assert!(rock.max_abs_diff(&want_r) < 1e-9);
        let bfam = b.family("B").unwrap();
        let want_b = net.posterior("B", &ev).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(bfam.cell(Cell::new(2, 1))[k], want_b[k], epsilon = 1e-9);
        }
        assert_eq!(b.rock_count(), 2);
    }

    #[test]
    fn uv_readings_match_the_generic_grid_with_kernel() {
        let m = model(KernelSpec::default());
        let mut fast = MarsBelief::new(Arc::clone(&m));
        let mut grid = crate::belief::GridBelief::new(&m.net.net, m.loc, KernelSpec::default()).unwrap();
        let mut rng = stream(8, Stream::Noise);
        for step in 0..30usize {
            let c = Cell::new(step * 7 % 4, step * 3 % 4);
            let obs = fast.sample_observation(SensorId::Uv, &Pose::at(c.x, c.y), &mut rng);
            fast.update(&obs).unwrap();
            grid.update(&obs).unwrap();
        }
        let a = fast.family("L").unwrap();
        let b = grid.family("L").unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
        let a = fast.family("B").unwrap();
        let b = grid.family("B").unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn camera_marks_the_footprint_seen() {
        let m = model(KernelSpec::default());
        let mut b = MarsBelief::new(Arc::clone(&m));
        let pose = Pose::facing(0, 0, Heading::EAST);
        b.update(&Observation {
            sensor: SensorId::Camera,
            pose,
            findings: vec![],
        })
        .unwrap();
        // 50 columns ahead, 30 rows after clipping at the bottom edge.
        assert_eq!(b.seen_count(), 50 * 30);
        assert_abs_diff_eq!(b.total_entropy(), 16.0 * 3f64.log2(), epsilon = 1e-9);
    }

    #[test]
    fn findings_outside_the_footprint_are_rejected() {
        let m = model(KernelSpec::default());
        let mut b = MarsBelief::new(Arc::clone(&m));
        let pose = Pose::facing(0, 0, Heading::EAST);
        let f = reading(&m, Cell::new(70, 70), &[0, 0, 0]);
        assert!(b
            .update(&Observation {
                sensor: SensorId::Camera,
                pose,
                findings: f
            })
            .is_err());
    }

    #[test]
    fn sampled_observations_fit_and_keep_normalization() {
        let m = model(KernelSpec::default());
        let mut b = MarsBelief::new(Arc::clone(&m));
        let mut rng = stream(3, Stream::Planner);
        for step in 0..40 {
            let pose = Pose::facing(step % 4, (step / 4) % 4, Heading::new(step as i32));
            let sensor = if step % 3 == 0 { SensorId::Uv } else { SensorId::Camera };
            b.simulate(sensor, &pose, &mut rng);
        }
        let l = b.family("L").unwrap();
        for c in l.probs.chunks(3) {
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(b.rock_count() > 0);
        assert!(b.total_entropy() < 16.0 * 3f64.log2());
    }

    #[test]
    fn uninformative_network_learns_nothing() {
        let cfg = MarsWorldConfig {
            loc_grid: GridDims::new(4, 4),
            region_block: 2,
            rock_grid: GridDims::new(80, 80),
            network: Some({
                let mut s = crate::world::default_mars_specs(3, 3, &Default::default());
                for spec in s.iter_mut().filter(|s| s.id.starts_with('Z') || s.id == "U") {
                    spec.cpt = Some(vec![vec![1.0 / 3.0; 3]; 3]);
                }
                s
            }),
            ..MarsWorldConfig::default()
        };
        let m = Arc::new(MarsModel::new(&cfg, KernelSpec::default()).unwrap());
        let mut b = MarsBelief::new(m);
        let mut rng = stream(1, Stream::Planner);
        for h in 0..8 {
            b.simulate(SensorId::Camera, &Pose::facing(1, 1, Heading::new(h)), &mut rng);
            b.simulate(SensorId::Uv, &Pose::facing(1, 1, Heading::new(h)), &mut rng);
        }
        assert_abs_diff_eq!(b.total_entropy(), 16.0 * 3f64.log2(), epsilon = 1e-9);
        let _ = NodeSpec::root("x", vec![1.0]);
    }
}
