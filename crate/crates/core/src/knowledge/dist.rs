use serde::{Deserialize, Serialize};
use std::ops::Index;

/// Probabilities are clamped to this value before normalization so long
/// update chains never produce `log(0)` or a zero divisor.
pub const PROB_FLOOR: f64 = 1e-12;

/// Normalizes in place, flooring every entry at [`PROB_FLOOR`]. A vector
/// with no positive mass becomes uniform.
pub fn normalize_in_place(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 && total.is_finite() {
        for x in v.iter_mut() {
            *x /= total;
        }
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
        return;
    }
    let mut total = 0.0;
    for x in v.iter_mut() {
        if !(*x >= PROB_FLOOR) {
            *x = PROB_FLOOR;
        }
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
}

/// Shannon entropy in bits. `0·log 0` counts as zero.
#[inline]
pub fn entropy_bits(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    h.max(0.0)
}

/// Entropy of a distribution in bits.
pub fn entropy(d: &Dist) -> f64 {
    entropy_bits(&d.0)
}

/// A normalized categorical distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dist(Vec<f64>);

impl Dist {
    /// Normalizes `weights` (with flooring) into a distribution.
    pub fn from_weights(mut weights: Vec<f64>) -> Self {
        normalize_in_place(&mut weights);
        Dist(weights)
    }

    /// Wraps an already-normalized vector without touching it.
    pub fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        Dist(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Dist(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Dist(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.0)
    }

    /// Index of the largest probability, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_abs_diff(&self, other: &Dist) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for Dist {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
