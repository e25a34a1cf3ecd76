//! Sensor models and simulated observations against a ground truth.

use super::mars::{sample_row, CameraFootprint};
use super::{mvp_node, GroundTruth, WorldError};
use crate::geom::{Cell, Pose};
use crate::knowledge::Finding;
use crate::rng::SimRng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorId {
    /// Mars rock camera.
    Camera,
    /// Mars UV light.
    Uv,
    /// Terrain-classifying camera (terrain/water scenario).
    TerrainCamera,
    /// Neutron spectrometer.
    Nss,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Footprint {
    /// Rectangle ahead of the robot in rock-grid cells.
    Rect {
        depth: usize,
        width: usize,
    },
    CurrentCell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// Readings follow the observation CPTs of the knowledge network.
    Network,
    /// Row `i` is the reading distribution when the truth is `i`.
    Confusion(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub id: SensorId,
    pub footprint: Footprint,
    pub noise: Noise,
    pub cost: f64,
}

/// Square confusion matrix with `error` spread evenly off the diagonal.
pub fn confusion(n: usize, error: f64) -> Vec<Vec<f64>> {
    super::mars::diagonal_table(n, 1.0 - error)
}

impl SensorSpec {
    pub fn mars_camera(depth: usize, width: usize, cost: f64) -> Self {
        SensorSpec {
            id: SensorId::Camera,
            footprint: Footprint::Rect { depth, width },
            noise: Noise::Network,
            cost,
        }
    }

    pub fn mars_uv(cost: f64) -> Self {
        SensorSpec {
            id: SensorId::Uv,
            footprint: Footprint::CurrentCell,
            noise: Noise::Network,
            cost,
        }
    }

    pub fn terrain_camera(n_terrain: usize, error: f64, cost: f64) -> Self {
        SensorSpec {
            id: SensorId::TerrainCamera,
            footprint: Footprint::CurrentCell,
            noise: Noise::Confusion(confusion(n_terrain, error)),
            cost,
        }
    }

    pub fn nss(n_water: usize, error: f64, cost: f64) -> Self {
        SensorSpec {
            id: SensorId::Nss,
            footprint: Footprint::CurrentCell,
            noise: Noise::Confusion(confusion(n_water, error)),
            cost,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(WorldError::Config(format!("{:?} cost must be positive", self.id)));
        }
        if let Noise::Confusion(m) = &self.noise {
            for row in m {
                if row.len() != m.len()
                    || row.iter().any(|&p| !(p >= 0.0))
                    || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return Err(WorldError::Config(format!(
                        "{:?} confusion matrix rows must be square and sum to 1",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Likelihood of reading `z` as a function of the true category.
    pub fn likelihood(&self, z: usize) -> Option<Vec<f64>> {
        match &self.noise {
            Noise::Confusion(m) => Some(m.iter().map(|row| row[z]).collect()),
            Noise::Network => None,
        }
    }
}

/// One finding attached to a grid cell. `node` indexes the scenario network:
/// the geology network for Mars, [`mvp_node`] for terrain/water.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFinding {
    pub cell: Cell,
    pub node: usize,
    pub finding: Finding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub sensor: SensorId,
    /// Pose at capture; for cameras the heading is the viewing direction.
    pub pose: Pose,
    pub findings: Vec<CellFinding>,
}

fn draw(rng: &mut SimRng, m: &[Vec<f64>], truth: usize) -> usize {
    sample_row(rng, &m[truth])
}

/// Simulates one reading of `sensor` at `pose`.
pub fn observe(
    gt: &GroundTruth,
    sensor: &SensorSpec,
    pose: &Pose,
    rng: &mut SimRng,
) -> Result<Observation, WorldError> {
    let dims = gt.grid();
    if pose.cell.x >= dims.width || pose.cell.y >= dims.height {
        return Err(WorldError::OutOfBounds(pose.cell));
    }
    let mut findings = Vec::new();
    match (gt, sensor.id) {
        (GroundTruth::Mars(w), SensorId::Camera) => {
            let view = pose
                .heading
                .ok_or_else(|| WorldError::Sensor("the camera needs a heading".into()))?;
            let (depth, width) = match sensor.footprint {
                Footprint::Rect { depth, width } => (depth, width),
                Footprint::CurrentCell => w.config.camera_fov,
            };
            let fp = CameraFootprint::with_geometry(depth, width, w.config.scale());
            let m = w.model();
            for c in fp.rock_cells(w.config.rock_grid, pose.cell, view) {
                if let Some(rock) = w.rock_at(c) {
                    for (k, &f) in rock.features.iter().enumerate() {
                        let z = sample_row(rng, m.row(m.z[k], f as usize));
                        findings.push(CellFinding {
                            cell: c,
                            node: m.z[k],
                            finding: Finding::Hard(z),
                        });
                    }
                }
            }
        }
        (GroundTruth::Mars(w), SensorId::Uv) => {
            let m = w.model();
            let b = w.uv[w.config.loc_grid.index(pose.cell)] as usize;
            let z = sample_row(rng, m.row(m.u, b));
            findings.push(CellFinding {
                cell: pose.cell,
                node: m.u,
                finding: Finding::Hard(z),
            });
        }
        (GroundTruth::Mvp(w), SensorId::TerrainCamera | SensorId::Nss) => {
            let is_image = sensor.id == SensorId::TerrainCamera;
            let node = if is_image { mvp_node::IMAGE } else { mvp_node::NSS };
            let finding = match &w.soft {
                Some(s) => {
                    let i = w.grid.index(pose.cell);
                    Finding::Soft(if is_image {
                        s.terrain[i].clone()
                    } else {
                        s.water[i].clone()
                    })
                }
                None => {
                    let Noise::Confusion(m) = &sensor.noise else {
                        return Err(WorldError::Sensor(
                            "terrain/water sensors need a confusion matrix".into(),
                        ));
                    };
                    let truth = if is_image {
                        w.terrain_at(pose.cell)
                    } else {
                        w.water_at(pose.cell)
                    };
                    Finding::Hard(draw(rng, m, truth as usize))
                }
            };
            findings.push(CellFinding {
                cell: pose.cell,
                node,
                finding,
            });
        }
        (_, id) => {
            return Err(WorldError::Sensor(format!(
                "sensor {id:?} is not defined for this scenario"
            )))
        }
    }
    Ok(Observation {
        sensor: sensor.id,
        pose: *pose,
        findings,
    })
}
