//! Belief grids, the spatial kernel and mission metrics.
//!
//! [`GridBelief`] keeps one absorbed [`TreeNet`](crate::knowledge::TreeNet)
//! per cell and works with any network. [`MarsBelief`] is the specialised
//! belief for the Mars scenario, where many rocks share one location cell and
//! the rock grid is much finer than the location grid.

mod grid;
mod mars;

pub use grid::GridBelief;
pub use mars::{MarsBelief, MarsModel};

use crate::geom::{Cell, GridDims};
use crate::knowledge::{entropy_bits, normalize_in_place};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown belief family `{0}`")]
    UnknownFamily(String),
    #[error("finding does not fit the model: {0}")]
    Finding(String),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("csv: {0}")]
    Io(String),
}

/// Gaussian spatial kernel. A finding at one cell moves the beliefs of
/// neighbours within `radius` towards the observed cell's update with weight
/// `exp(-d^2 / (2 sigma^2))`; weights below `floor` count as zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSpec {
    pub sigma: f64,
    pub radius: f64,
    pub floor: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            sigma: 1.0,
            radius: 2.0,
            floor: 1e-3,
        }
    }
}

impl KernelSpec {
    pub fn off() -> Self {
        KernelSpec {
            radius: 0.0,
            ..KernelSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), BeliefError> {
        if !(self.sigma > 0.0) {
            return Err(BeliefError::Kernel("sigma must be positive".into()));
        }
        if !(self.radius >= 0.0) {
            return Err(BeliefError::Kernel("radius must be non-negative".into()));
        }
        Ok(())
    }

    pub fn weight(&self, d2: f64) -> f64 {
        if d2 > self.radius * self.radius {
            return 0.0;
        }
        let w = (-d2 / (2.0 * self.sigma * self.sigma)).exp();
        if w < self.floor {
            0.0
        } else {
            w
        }
    }

    /// Neighbour offsets with non-zero weight, excluding the centre.
    pub fn offsets(&self) -> Vec<(i64, i64, f64)> {
        let r = self.radius.floor() as i64;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let w = self.weight((dx * dx + dy * dy) as f64);
                if w > 0.0 {
                    out.push((dx, dy, w));
                }
            }
        }
        out
    }
}

/// Moves `belief` towards its Bayesian update under `lambda` by weight `w`:
/// `(1 - w) * belief + w * normalize(belief * lambda)`.
pub fn blend_toward(belief: &mut [f64], lambda: &[f64], w: f64) {
    let mut post: SmallVec<[f64; 8]> = belief.iter().zip(lambda).map(|(p, l)| p * l).collect();
    normalize_in_place(&mut post);
    for (b, p) in belief.iter_mut().zip(&post) {
        *b = (1.0 - w) * *b + w * p;
    }
    normalize_in_place(belief);
}

/// One latent variable's per-cell distributions on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyGrid {
    pub dims: GridDims,
    pub cardinality: usize,
    /// Row-major cells, `cardinality` probabilities each.
    pub probs: Vec<f64>,
}

impl FamilyGrid {
    pub fn uniform(dims: GridDims, cardinality: usize) -> Self {
        FamilyGrid {
            dims,
            cardinality,
            probs: vec![1.0 / cardinality as f64; dims.len() * cardinality],
        }
    }

    pub fn cell(&self, c: Cell) -> &[f64] {
        self.at(self.dims.index(c))
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.probs[i * self.cardinality..(i + 1) * self.cardinality]
    }

    fn same_shape(&self, other: &FamilyGrid) -> Result<(), BeliefError> {
        if self.dims != other.dims || self.cardinality != other.cardinality {
            return Err(BeliefError::Dimension(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.dims.width,
                self.dims.height,
                self.cardinality,
                other.dims.width,
                other.dims.height,
                other.cardinality
            )));
        }
        Ok(())
    }

    /// One row per cell: `x, y, p_1..p_k`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), BeliefError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["x".to_string(), "y".to_string()];
        header.extend((1..=self.cardinality).map(|k| format!("p_{k}")));
        out.write_record(&header).map_err(|e| BeliefError::Io(e.to_string()))?;
        for (i, c) in self.dims.cells().enumerate() {
            let mut row = vec![c.x.to_string(), c.y.to_string()];
            row.extend(self.at(i).iter().map(|p| format!("{p:.9}")));
            out.write_record(&row).map_err(|e| BeliefError::Io(e.to_string()))?;
        }
        out.flush().map_err(|e| BeliefError::Io(e.to_string()))
    }
}

/// Sum of per-cell Shannon entropies in bits.
pub fn total_entropy(grid: &FamilyGrid) -> f64 {
    grid.probs.chunks(grid.cardinality).map(entropy_bits).sum()
}

/// Entropy removed between two snapshots. Negative when beliefs got less
/// certain, which a single noisy reading can do.
pub fn info_gain(before: &FamilyGrid, after: &FamilyGrid) -> Result<f64, BeliefError> {
    before.same_shape(after)?;
    Ok(total_entropy(before) - total_entropy(after))
}

/// Mean probability assigned to the true class, over every cell.
pub fn recognition_score(grid: &FamilyGrid, truth: &[u8]) -> Result<f64, BeliefError> {
    if truth.len() != grid.dims.len() {
        return Err(BeliefError::Dimension(format!(
            "{} truth cells for {} belief cells",
            truth.len(),
            grid.dims.len()
        )));
    }
    let mut sum = 0.0;
    for (i, &t) in truth.iter().enumerate() {
        let t = t as usize;
        if t >= grid.cardinality {
            return Err(BeliefError::Dimension(format!("true class {t} out of range")));
        }
        sum += grid.at(i)[t];
    }
    Ok(sum / truth.len() as f64)
}
