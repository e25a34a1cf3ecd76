use super::{blend_toward, BeliefError, FamilyGrid, KernelSpec};
use crate::geom::{Cell, GridDims};
use crate::knowledge::{Finding, TreeNet};
use crate::world::Observation;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
struct CellState {
    prior: Vec<f64>,
    /// Accumulated likelihood per network node.
    ev: Vec<Vec<f64>>,
}

/// Network-agnostic belief grid. Every cell shares the network and keeps its
/// own root prior plus the likelihood its readings put on each node.
///
/// A finding on a leaf is one independent reading: its likelihood is passed
/// to the leaf's parent, so repeated readings accumulate. A finding on any
/// other node constrains that node directly.
///
/// Findings of one observation are grouped by cell. The change they cause in
/// the cell's root likelihood is spread to neighbours' priors through the
/// kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct GridBelief {
    net: Arc<TreeNet>,
    dims: GridDims,
    kernel: KernelSpec,
    offsets: Vec<(i64, i64, f64)>,
    cells: Vec<CellState>,
}

impl GridBelief {
    pub fn new(net: &TreeNet, dims: GridDims, kernel: KernelSpec) -> Result<Self, BeliefError> {
        kernel.validate()?;
        let state = CellState {
            prior: net.prior().to_vec(),
            ev: (0..net.len()).map(|i| vec![1.0; net.cardinality(i)]).collect(),
        };
        Ok(GridBelief {
            net: Arc::new(net.clone()),
            dims,
            kernel,
            offsets: kernel.offsets(),
            cells: vec![state; dims.len()],
        })
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn network(&self) -> &TreeNet {
        &self.net
    }

    /// Current root prior of a cell, including what neighbours passed on.
    pub fn prior(&self, c: Cell) -> &[f64] {
        &self.cells[self.dims.index(c)].prior
    }

    fn check(&self, node: usize, f: &Finding) -> Result<(), BeliefError> {
        let net = &self.net;
        if node >= net.len() {
            return Err(BeliefError::Finding(format!("node index {node} not in network")));
        }
        let card = net.cardinality(node);
        match f {
            Finding::Hard(k) if *k >= card => Err(BeliefError::Finding(format!(
                "category {k} out of range for `{}`",
                net.id(node)
            ))),
            Finding::Soft(v) if v.len() != card => Err(BeliefError::Finding(format!(
                "soft finding on `{}` has length {}, expected {card}",
                net.id(node),
                v.len()
            ))),
            Finding::Soft(v) if v.iter().any(|&x| !(x >= 0.0)) || v.iter().all(|&x| x == 0.0) => Err(
                BeliefError::Finding(format!("soft finding on `{}` is not a likelihood", net.id(node))),
            ),
            _ => Ok(()),
        }
    }

    fn accumulate(&self, ev: &mut [Vec<f64>], node: usize, f: &Finding) {
        let net = &self.net;
        let mut lik = vec![1.0; net.cardinality(node)];
        f.apply(&mut lik);
        let (target, msg) = match net.parent(node) {
            Some(p) if net.children(node).is_empty() => {
                let msg = (0..net.cardinality(p))
                    .map(|pv| net.row(node, pv).iter().zip(&lik).map(|(a, b)| a * b).sum())
                    .collect();
                (p, msg)
            }
            _ => (node, lik),
        };
        for (e, m) in ev[target].iter_mut().zip(&msg) {
            *e *= m;
        }
        let max = ev[target].iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            ev[target].iter_mut().for_each(|e| *e /= max);
        }
    }

    /// Folds an observation into the grid.
    pub fn update(&mut self, obs: &Observation) -> Result<(), BeliefError> {
        let mut groups: BTreeMap<usize, Vec<(usize, &Finding)>> = BTreeMap::new();
        for f in &obs.findings {
            if f.cell.x >= self.dims.width || f.cell.y >= self.dims.height {
                return Err(BeliefError::Dimension(format!(
                    "finding at ({}, {}) outside the grid",
                    f.cell.x, f.cell.y
                )));
            }
            self.check(f.node, &f.finding)?;
            groups
                .entry(self.dims.index(f.cell))
                .or_default()
                .push((f.node, &f.finding));
        }
        for (i, findings) in groups {
            let mut ev = self.cells[i].ev.clone();
            let before = self.net.root_likelihood_with(&ev);
            for (node, f) in findings {
                self.accumulate(&mut ev, node, f);
            }
            let after = self.net.root_likelihood_with(&ev);
            self.cells[i].ev = ev;
            let lambda: Vec<f64> = after
                .iter()
                .zip(&before)
                .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
                .collect();
            let c = self.dims.cell(i);
            for &(dx, dy, w) in &self.offsets {
                if let Some(n) = self.dims.offset(c, dx, dy) {
                    blend_toward(&mut self.cells[self.dims.index(n)].prior, &lambda, w);
                }
            }
        }
        Ok(())
    }

    /// Returns an updated copy, leaving `self` untouched.
    pub fn updated(&self, obs: &Observation) -> Result<GridBelief, BeliefError> {
        let mut next = self.clone();
        next.update(obs)?;
        Ok(next)
    }

    /// Per-cell beliefs of node `id`.
    pub fn family(&self, id: &str) -> Result<FamilyGrid, BeliefError> {
        let ix = self
            .net
            .node_ix(id)
            .map_err(|_| BeliefError::UnknownFamily(id.to_string()))?;
        let card = self.net.cardinality(ix);
        let mut probs = Vec::with_capacity(self.cells.len() * card);
        for cell in &self.cells {
            probs.extend_from_slice(self.net.beliefs_with(&cell.prior, &cell.ev)[ix].probs());
        }
        Ok(FamilyGrid {
            dims: self.dims,
            cardinality: card,
            probs,
        })
    }
}
