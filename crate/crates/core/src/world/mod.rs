//! Hidden ground-truth worlds and simulated sensing.
//!
//! Two scenarios are supported. The Mars world has location blocks on a
//! coarse grid, rocks on a fine grid and a UV grid, all sampled from the
//! geology network. The terrain/water world has Voronoi terrain regions with
//! water correlated to terrain. Worlds round-trip through JSON snapshots so
//! several planners can be run on identical maps.

mod mars;
mod replay;
mod sensor;
mod voronoi;

pub use mars::{
    default_mars_specs, diagonal_table, gen_mars_world, CameraFootprint, MarsNet, MarsNetParams, MarsTruth,
    MarsWorldConfig, Rock,
};
pub use replay::{synthetic_dataset, ReplayDataset, ReplayRecord};
pub use sensor::{confusion, observe, CellFinding, Footprint, Noise, Observation, SensorId, SensorSpec};
pub use voronoi::{gen_voronoi_world, MvpTruth, MvpWorldConfig, SoftReadings};

use crate::geom::{Cell, GridDims};
use crate::knowledge::KnowledgeError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node indices of the terrain/water model `T → Z_I`, `T → W → Z_S`.
pub mod mvp_node {
    pub const TERRAIN: usize = 0;
    pub const IMAGE: usize = 1;
    pub const WATER: usize = 2;
    pub const NSS: usize = 3;
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world config: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] KnowledgeError),
    #[error("pose ({}, {}) is outside the grid", .0.x, .0.y)]
    OutOfBounds(Cell),
    #[error("{0}")]
    Sensor(String),
    #[error("invalid snapshot: {0}")]
    Snapshot(String),
    #[error("replay data: {0}")]
    Replay(String),
    #[error("snapshot JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum GroundTruth {
    Mars(MarsTruth),
    Mvp(MvpTruth),
}

impl GroundTruth {
    /// The grid robots move on.
    pub fn grid(&self) -> GridDims {
        match self {
            GroundTruth::Mars(w) => w.config.loc_grid,
            GroundTruth::Mvp(w) => w.grid,
        }
    }

    /// True class of the target variable per cell (location or water).
    pub fn target(&self) -> &[u8] {
        match self {
            GroundTruth::Mars(w) => &w.location,
            GroundTruth::Mvp(w) => &w.water,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ground truth serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let gt: GroundTruth = serde_json::from_str(text)?;
        if let GroundTruth::Mvp(w) = &gt {
            w.check()?;
        }
        Ok(gt)
    }

    /// FNV-1a hash of the snapshot, used to confirm that paired trials saw
    /// the same map.
    pub fn checksum(&self) -> u64 {
        self.to_json().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshots_round_trip_and_checksum() {
        let cfg = MvpWorldConfig {
            seed: 8,
            ..Default::default()
        };
        let gt = GroundTruth::Mvp(gen_voronoi_world(&cfg).unwrap());
        let text = gt.to_json();
        assert!(text.contains("\"scenario\":\"mvp\""));
        let back = GroundTruth::from_json(&text).unwrap();
        assert_eq!(back, gt);
        assert_eq!(back.checksum(), gt.checksum());
        let other = GroundTruth::Mvp(gen_voronoi_world(&MvpWorldConfig { seed: 9, ..cfg }).unwrap());
        assert_ne!(other.checksum(), gt.checksum());
    }

    #[test]
    fn corrupt_snapshot_is_rejected() {
        let cfg = MvpWorldConfig {
            seed: 8,
            ..Default::default()
        };
        let mut w = gen_voronoi_world(&cfg).unwrap();
        w.water[0] = 7;
        let text = GroundTruth::Mvp(w).to_json();
        assert!(GroundTruth::from_json(&text).is_err());
    }
}
