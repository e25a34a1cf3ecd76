//! Terrain/water scenario: Voronoi terrain regions and a water grid that
//! follows terrain through a fixed class permutation, corrupted per cell.

use super::WorldError;
use crate::geom::{Cell, GridDims};
use crate::rng::{stream, Stream};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MvpWorldConfig {
    pub grid: GridDims,
    pub n_terrain: usize,
    pub n_water: usize,
    /// Probability that a cell's water class is the one designated by its
    /// terrain class.
    pub terrain_water_correlation: f64,
    pub n_voronoi_seeds: usize,
    /// Designated water class per terrain class. Defaults to the reversal
    /// `t -> n_water - 1 - t`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub water_permutation: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for MvpWorldConfig {
    fn default() -> Self {
        MvpWorldConfig {
            grid: GridDims::new(20, 20),
            n_terrain: 3,
            n_water: 3,
            terrain_water_correlation: 0.85,
            n_voronoi_seeds: 10,
            water_permutation: None,
            seed: 0,
        }
    }
}

impl MvpWorldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::Config(m.to_string()));
        if self.grid.is_empty() {
            return bad("grid must be non-empty");
        }
        if self.n_terrain < 2 || self.n_water < 2 {
            return bad("need at least two terrain and two water classes");
        }
        if !(0.0..=1.0).contains(&self.terrain_water_correlation) {
            return bad("terrain_water_correlation must lie in [0, 1]");
        }
        if self.n_voronoi_seeds == 0 {
            return bad("n_voronoi_seeds must be at least 1");
        }
        if let Some(p) = &self.water_permutation {
            if p.len() != self.n_terrain || p.iter().any(|&w| w >= self.n_water) {
                return bad("water_permutation needs one valid water class per terrain class");
            }
        }
        Ok(())
    }

    pub fn permutation(&self) -> Vec<usize> {
        self.water_permutation.clone().unwrap_or_else(|| {
            (0..self.n_terrain)
                .map(|t| (self.n_water - 1 - t % self.n_water) % self.n_water)
                .collect()
        })
    }

    /// Generating P(W | T) as a `|W| x |T|` column-stochastic matrix.
    pub fn water_given_terrain(&self) -> Vec<Vec<f64>> {
        let perm = self.permutation();
        let c = self.terrain_water_correlation;
        let off = (1.0 - c) / (self.n_water - 1) as f64;
        (0..self.n_water)
            .map(|w| {
                (0..self.n_terrain)
                    .map(|t| if perm[t] == w { c } else { off })
                    .collect()
            })
            .collect()
    }
}

/// Hidden terrain/water world. Replay worlds also carry the per-cell soft
/// classifier outputs that stand in for sensor readings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvpTruth {
    pub grid: GridDims,
    pub n_terrain: usize,
    pub n_water: usize,
    pub terrain: Vec<u8>,
    pub water: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft: Option<SoftReadings>,
}

/// Soft image and NSS likelihoods per cell, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftReadings {
    pub terrain: Vec<Vec<f64>>,
    pub water: Vec<Vec<f64>>,
}

impl MvpTruth {
    pub fn terrain_at(&self, c: Cell) -> u8 {
        self.terrain[self.grid.index(c)]
    }

    pub fn water_at(&self, c: Cell) -> u8 {
        self.water[self.grid.index(c)]
    }

    pub(crate) fn check(&self) -> Result<(), WorldError> {
        let n = self.grid.len();
        let bad = |m: &str| Err(WorldError::Snapshot(m.to_string()));
        if self.terrain.len() != n || self.water.len() != n {
            return bad("grid length mismatch");
        }
        if self.terrain.iter().any(|&t| t as usize >= self.n_terrain)
            || self.water.iter().any(|&w| w as usize >= self.n_water)
        {
            return bad("category out of range");
        }
        if let Some(s) = &self.soft {
            if s.terrain.len() != n
                || s.water.len() != n
                || s.terrain.iter().any(|v| v.len() != self.n_terrain)
                || s.water.iter().any(|v| v.len() != self.n_water)
            {
                return bad("soft readings do not match the grid");
            }
        }
        Ok(())
    }
}

/// Terrain from the nearest of `n_voronoi_seeds` uniformly placed sites
/// (Euclidean, lowest site index on ties). Each site gets a uniform terrain
/// class. Water follows the terrain's designated class with probability
/// `terrain_water_correlation`, otherwise one of the other classes uniformly.
pub fn gen_voronoi_world(cfg: &MvpWorldConfig) -> Result<MvpTruth, WorldError> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, Stream::World);
    let g = cfg.grid;
    let sites: Vec<(f64, f64, u8)> = (0..cfg.n_voronoi_seeds)
        .map(|_| {
            let x = rng.random::<f64>() * g.width as f64;
            let y = rng.random::<f64>() * g.height as f64;
            let t = rng.random_range(0..cfg.n_terrain) as u8;
            (x, y, t)
        })
        .collect();
    let terrain: Vec<u8> = g
        .cells()
        .map(|c| {
            let (cx, cy) = (c.x as f64 + 0.5, c.y as f64 + 0.5);
            let mut best = (f64::INFINITY, 0u8);
            for &(x, y, t) in &sites {
                let d = (x - cx).powi(2) + (y - cy).powi(2);
                if d < best.0 {
                    best = (d, t);
                }
            }
            best.1
        })
        .collect();
    let perm = cfg.permutation();
    let water: Vec<u8> = terrain
        .iter()
        .map(|&t| {
            let modal = perm[t as usize];
            if rng.random::<f64>() < cfg.terrain_water_correlation {
                modal as u8
            } else {
                let k = rng.random_range(0..cfg.n_water - 1);
                (if k >= modal { k + 1 } else { k }) as u8
            }
        })
        .collect();
    Ok(MvpTruth {
        grid: g,
        n_terrain: cfg.n_terrain,
        n_water: cfg.n_water,
        terrain,
        water,
        soft: None,
    })
}
