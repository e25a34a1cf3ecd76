//! Soft-evidence replay datasets: one (image, NSS) likelihood pair per
//! record, laid out on a grid by a seeded permutation.

use super::voronoi::{gen_voronoi_world, MvpTruth, MvpWorldConfig, SoftReadings};
use super::{confusion, WorldError};
use crate::geom::{Cell, GridDims};
use crate::knowledge::Dist;
use crate::rng::{stream, Stream};
use rand::seq::SliceRandom;
use std::io::{Read, Write};

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayRecord {
    pub cell: Cell,
    pub terrain: Vec<f64>,
    pub nss: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayDataset {
    pub n_terrain: usize,
    pub n_water: usize,
    pub records: Vec<ReplayRecord>,
}

fn csv_err(e: impl std::fmt::Display) -> WorldError {
    WorldError::Replay(e.to_string())
}

impl ReplayDataset {
    /// Reads `cell_x, cell_y, terrain_likelihood_1..T, nss_likelihood_1..W`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, WorldError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let col = |prefix: &str| -> Vec<usize> {
            let mut cols: Vec<(usize, usize)> = headers
                .iter()
                .enumerate()
                .filter_map(|(i, h)| {
                    h.strip_prefix(prefix)
                        .and_then(|k| k.parse::<usize>().ok())
                        .map(|k| (k, i))
                })
                .collect();
            cols.sort();
            cols.into_iter().map(|(_, i)| i).collect()
        };
        let t_cols = col("terrain_likelihood_");
        let w_cols = col("nss_likelihood_");
        let x_col = headers.iter().position(|h| h == "cell_x");
        let y_col = headers.iter().position(|h| h == "cell_y");
        let (Some(x_col), Some(y_col)) = (x_col, y_col) else {
            return Err(WorldError::Replay("missing cell_x/cell_y columns".into()));
        };
        if t_cols.len() < 2 || w_cols.len() < 2 {
            return Err(WorldError::Replay(
                "need at least two terrain and two NSS likelihood columns".into(),
            ));
        }
        let mut records = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row.map_err(csv_err)?;
            let num = |i: usize| -> Result<f64, WorldError> {
                row.get(i)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|e| WorldError::Replay(format!("row {}: {e}", line + 1)))
            };
            let vec = |cols: &[usize]| -> Result<Vec<f64>, WorldError> {
                let v = cols.iter().map(|&i| num(i)).collect::<Result<Vec<_>, _>>()?;
                if v.iter().any(|&x| !(x >= 0.0)) || v.iter().all(|&x| x == 0.0) {
                    return Err(WorldError::Replay(format!(
                        "row {}: likelihoods must be non-negative and not all zero",
                        line + 1
                    )));
                }
                Ok(v)
            };
            records.push(ReplayRecord {
                cell: Cell::new(num(x_col)? as usize, num(y_col)? as usize),
                terrain: vec(&t_cols)?,
                nss: vec(&w_cols)?,
            });
        }
        Ok(ReplayDataset {
            n_terrain: t_cols.len(),
            n_water: w_cols.len(),
            records,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), WorldError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["cell_x".to_string(), "cell_y".to_string()];
        header.extend((1..=self.n_terrain).map(|k| format!("terrain_likelihood_{k}")));
        header.extend((1..=self.n_water).map(|k| format!("nss_likelihood_{k}")));
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![r.cell.x.to_string(), r.cell.y.to_string()];
            row.extend(r.terrain.iter().chain(&r.nss).map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| WorldError::Replay(e.to_string()))
    }

    /// Places every record on `grid` by a permutation drawn from `seed`.
    /// Terrain and water truth are the argmax of each record's likelihoods.
    pub fn layout(&self, grid: GridDims, seed: u64) -> Result<MvpTruth, WorldError> {
        if self.records.len() != grid.len() {
            return Err(WorldError::Replay(format!(
                "{} records cannot fill a {}x{} grid",
                self.records.len(),
                grid.width,
                grid.height
            )));
        }
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        order.shuffle(&mut stream(seed, Stream::Replay));
        let rec = |i: usize| &self.records[order[i]];
        let argmax = |v: &[f64]| Dist::from_weights(v.to_vec()).argmax() as u8;
        let truth = MvpTruth {
            grid,
            n_terrain: self.n_terrain,
            n_water: self.n_water,
            terrain: (0..grid.len()).map(|i| argmax(&rec(i).terrain)).collect(),
            water: (0..grid.len()).map(|i| argmax(&rec(i).nss)).collect(),
            soft: Some(SoftReadings {
                terrain: (0..grid.len()).map(|i| rec(i).terrain.clone()).collect(),
                water: (0..grid.len()).map(|i| rec(i).nss.clone()).collect(),
            }),
        };
        truth.check()?;
        Ok(truth)
    }
}

/// Stand-in for a field dataset: a Voronoi terrain/water world whose cells
/// are classified once by noisy classifiers, each label turned into the
/// likelihood column of the classifier's confusion matrix.
pub fn synthetic_dataset(
    world: &MvpWorldConfig,
    terrain_error: f64,
    nss_error: f64,
) -> Result<ReplayDataset, WorldError> {
    let truth = gen_voronoi_world(world)?;
    let ct = confusion(world.n_terrain, terrain_error);
    let cw = confusion(world.n_water, nss_error);
    let mut rng = stream(world.seed, Stream::Noise);
    let mut label = |m: &[Vec<f64>], k: usize| -> Vec<f64> {
        let z = super::mars::sample_row(&mut rng, &m[k]);
        m.iter().map(|row| row[z]).collect()
    };
    let records = truth
        .grid
        .cells()
        .map(|c| {
            let terrain = label(&ct, truth.terrain_at(c) as usize);
            let nss = label(&cw, truth.water_at(c) as usize);
            ReplayRecord { cell: c, terrain, nss }
        })
        .collect();
    Ok(ReplayDataset {
        n_terrain: world.n_terrain,
        n_water: world.n_water,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> ReplayDataset {
        let cfg = MvpWorldConfig {
            grid: GridDims::new(10, 10),
            seed: 11,
            ..MvpWorldConfig::default()
        };
        synthetic_dataset(&cfg, 0.2, 0.1).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let d = data();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cell_x,cell_y,terrain_likelihood_1,"));
        let back = ReplayDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn layout_is_a_seeded_permutation() {
        let d = data();
        let a = d.layout(GridDims::new(10, 10), 1).unwrap();
        let b = d.layout(GridDims::new(10, 10), 1).unwrap();
        let c = d.layout(GridDims::new(10, 10), 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.soft, c.soft);
        let mut sa: Vec<String> = a.soft.unwrap().water.iter().map(|v| format!("{v:?}")).collect();
        let mut sd: Vec<String> = d.records.iter().map(|r| format!("{:?}", r.nss)).collect();
        sa.sort();
        sd.sort();
        assert_eq!(sa, sd);
    }

    #[test]
    fn wrong_record_count_is_rejected() {
        assert!(data().layout(GridDims::new(5, 5), 1).is_err());
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let text = "cell_x,cell_y,terrain_likelihood_1,terrain_likelihood_2,nss_likelihood_1,nss_likelihood_2\n0,0,0.5,x,0.1,0.9\n";
        assert!(ReplayDataset::read_csv(text.as_bytes()).is_err());
        let text = "cell_x,terrain_likelihood_1\n0,1\n";
        assert!(ReplayDataset::read_csv(text.as_bytes()).is_err());
    }
}
