//! Terrain/water model with an unknown terrain-to-water conditional.
//!
//! Each terrain class `t` has its own water distribution `theta_t`, drawn
//! from a Dirichlet with hyperparameters `alpha[.][t]`. One `theta` is shared
//! by all cells. Beliefs use the expected `theta`; every reading adds the
//! cell's posterior joint over `(W, T)` to `alpha` as fractional counts.

mod belief;

pub use belief::{MvpBelief, MvpModel};

use crate::knowledge::{normalize_in_place, Dist};
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearningError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hyperparameters must be positive")]
    NonPositive,
    #[error("joint posterior has a negative entry")]
    NegativeJoint,
    #[error("csv: {0}")]
    Io(String),
}

/// Dirichlet hyperparameters, a `|W| x |T|` matrix stored row-major.
/// Column `t` parameterizes `P(W | T = t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    pub n_water: usize,
    pub n_terrain: usize,
    pub alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn uniform(n_water: usize, n_terrain: usize, value: f64) -> Self {
        DirichletParams {
            n_water,
            n_terrain,
            alpha: vec![value; n_water * n_terrain],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LearningError> {
        let n_terrain = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n_terrain == 0 || rows.iter().any(|r| r.len() != n_terrain) {
            return Err(LearningError::Dimension(
                "alpha rows must be non-empty and equally long".into(),
            ));
        }
        let p = DirichletParams {
            n_water: rows.len(),
            n_terrain,
            alpha: rows.concat(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), LearningError> {
        if self.alpha.len() != self.n_water * self.n_terrain {
            return Err(LearningError::Dimension(format!(
                "{} entries for a {}x{} matrix",
                self.alpha.len(),
                self.n_water,
                self.n_terrain
            )));
        }
        if self.alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(LearningError::NonPositive);
        }
        Ok(())
    }

    pub fn get(&self, w: usize, t: usize) -> f64 {
        self.alpha[w * self.n_terrain + t]
    }

    pub fn add(&mut self, w: usize, t: usize, amount: f64) {
        self.alpha[w * self.n_terrain + t] += amount;
    }

    /// One line per water class, one column per terrain class.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), LearningError> {
        let io = |e: csv::Error| LearningError::Io(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["water".to_string()];
        header.extend((1..=self.n_terrain).map(|t| format!("terrain_{t}")));
        out.write_record(&header).map_err(io)?;
        for (w, row) in self.alpha.chunks(self.n_terrain).enumerate() {
            let mut rec = vec![(w + 1).to_string()];
            rec.extend(row.iter().map(|a| a.to_string()));
            out.write_record(&rec).map_err(io)?;
        }
        out.flush().map_err(|e| LearningError::Io(e.to_string()))
    }
}

/// `E(theta)`: every column of `alpha` normalized. Same layout as `alpha`.
pub fn expected_theta(p: &DirichletParams) -> Vec<f64> {
    let mut theta = p.alpha.clone();
    for t in 0..p.n_terrain {
        let total: f64 = (0..p.n_water).map(|w| p.get(w, t)).sum();
        for w in 0..p.n_water {
            theta[w * p.n_terrain + t] /= total;
        }
    }
    theta
}

fn check_lens(prior_t: &[f64], image: &[f64], nss: &[f64], p: &DirichletParams) -> Result<(), LearningError> {
    if prior_t.len() != p.n_terrain || image.len() != p.n_terrain || nss.len() != p.n_water {
        return Err(LearningError::Dimension(format!(
            "terrain vectors of {} and {} and a water vector of {} for a {}x{} model",
            prior_t.len(),
            image.len(),
            nss.len(),
            p.n_water,
            p.n_terrain
        )));
    }
    Ok(())
}

/// Unnormalized `P(T) P(Z_I|T) E(theta)[w][t] P(Z_S|W)`, row-major `[w][t]`.
pub(crate) fn joint_weights(prior_t: &[f64], image: &[f64], nss: &[f64], theta: &[f64], out: &mut [f64]) {
    let nt = prior_t.len();
    for (w, ls) in nss.iter().enumerate() {
        for t in 0..nt {
            out[w * nt + t] = prior_t[t] * image[t] * theta[w * nt + t] * ls;
        }
    }
}

/// `P(W, T | Z_I, Z_S)` for one cell, row-major `[w][t]`. `image` and `nss`
/// are the likelihoods of the cell's readings over `T` and `W`.
pub fn joint_posterior(
    prior_t: &[f64],
    image: &[f64],
    nss: &[f64],
    p: &DirichletParams,
) -> Result<Vec<f64>, LearningError> {
    check_lens(prior_t, image, nss, p)?;
    let mut joint = vec![0.0; p.alpha.len()];
    joint_weights(prior_t, image, nss, &expected_theta(p), &mut joint);
    let total: f64 = joint.iter().sum();
    if total > 0.0 {
        joint.iter_mut().for_each(|x| *x /= total);
    }
    Ok(joint)
}

/// `P(W | Z) ∝ P(Z_S|W) sum_T P(T) P(Z_I|T) E(theta)`.
pub fn posterior_water(
    prior_t: &[f64],
    image: &[f64],
    nss: &[f64],
    p: &DirichletParams,
) -> Result<Dist, LearningError> {
    check_lens(prior_t, image, nss, p)?;
    let theta = expected_theta(p);
    let nt = p.n_terrain;
    let w: Vec<f64> = (0..p.n_water)
        .map(|w| nss[w] * (0..nt).map(|t| prior_t[t] * image[t] * theta[w * nt + t]).sum::<f64>())
        .collect();
    Ok(Dist::from_weights(w))
}

/// `P(T | Z) ∝ P(T) P(Z_I|T) sum_W P(Z_S|W) E(theta)`.
pub fn posterior_terrain(
    prior_t: &[f64],
    image: &[f64],
    nss: &[f64],
    p: &DirichletParams,
) -> Result<Dist, LearningError> {
    check_lens(prior_t, image, nss, p)?;
    let theta = expected_theta(p);
    let nt = p.n_terrain;
    let mut v: Vec<f64> = (0..nt)
        .map(|t| prior_t[t] * image[t] * (0..p.n_water).map(|w| nss[w] * theta[w * nt + t]).sum::<f64>())
        .collect();
    normalize_in_place(&mut v);
    Ok(Dist::from_normalized(v))
}

/// Conjugate update: `alpha[w][t] += joint[w][t]`.
pub fn update_alpha(p: &DirichletParams, joint: &[f64]) -> Result<DirichletParams, LearningError> {
    if joint.len() != p.alpha.len() {
        return Err(LearningError::Dimension(format!(
            "joint of {} entries for {} hyperparameters",
            joint.len(),
            p.alpha.len()
        )));
    }
    if joint.iter().any(|&x| !(x >= 0.0)) {
        return Err(LearningError::NegativeJoint);
    }
    let mut next = p.clone();
    for (a, j) in next.alpha.iter_mut().zip(joint) {
        *a += j;
    }
    Ok(next)
}
