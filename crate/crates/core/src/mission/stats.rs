use super::TrialResult;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("samples differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("need at least two pairs, got {0}")]
    TooFew(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    /// Two-sided.
    pub p: f64,
    /// The differences have zero variance. `p` is then 1 when they are all
    /// zero and 0 otherwise.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub d: f64,
    /// Zero-variance differences: `d` is 0 when they are all zero and
    /// infinite (with the sign of the mean) otherwise.
    pub degenerate: bool,
}

fn differences(x: &[f64], y: &[f64]) -> Result<(f64, f64, usize), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Length(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFew(n));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, var.sqrt(), n))
}

/// Small relative tolerance for "zero variance" so rounding in the
/// differences does not pass for spread.
fn is_flat(mean: f64, sd: f64) -> bool {
    sd <= 1e-12 * mean.abs()
}

/// Two-sided paired Student's t-test on `x - y`.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TTest, StatsError> {
    let (mean, sd, n) = differences(x, y)?;
    let df = n - 1;
    if is_flat(mean, sd) {
        let zero = mean == 0.0;
        return Ok(TTest {
            t: if zero { 0.0 } else { mean.signum() * f64::INFINITY },
            df,
            p: if zero { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
    Ok(TTest {
        t,
        df,
        p,
        degenerate: false,
    })
}

/// Paired effect size `mean(x - y) / sd(x - y)` with the `n - 1` standard
/// deviation. Negative when `x` underperforms `y`.
pub fn cohens_d(x: &[f64], y: &[f64]) -> Result<Effect, StatsError> {
    let (mean, sd, _) = differences(x, y)?;
    if is_flat(mean, sd) {
        let d = if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        };
        return Ok(Effect { d, degenerate: true });
    }
    Ok(Effect {
        d: mean / sd,
        degenerate: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub planner: String,
    pub budget: f64,
    pub n: usize,
    pub info_gain_mean: f64,
    pub info_gain_std: f64,
    pub recognition_mean: f64,
    pub recognition_std: f64,
}

/// `planner` against `reference` on one metric and budget, paired by map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub budget: f64,
    pub metric: String,
    pub planner: String,
    pub reference: String,
    pub planner_mean: f64,
    pub reference_mean: f64,
    pub t: f64,
    pub p: f64,
    pub d: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub groups: Vec<GroupStats>,
    pub comparisons: Vec<Comparison>,
}

impl StatsSummary {
    pub fn group(&self, planner: &str, budget: f64) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.planner == planner && g.budget == budget)
    }

    pub fn comparison(&self, planner: &str, reference: &str, budget: f64, metric: &str) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.planner == planner && c.reference == reference && c.budget == budget && c.metric == metric)
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, s)
}

/// Aggregates trials laid out as `results[map][planner][budget]`.
///
/// `planners` gives the label of each planner slot (labels may repeat);
/// every slot is compared with slot `reference`, or every pair of slots
/// `(i, j)` with `i < j` when no reference is given.
pub fn summarize(
    results: &[Vec<Vec<TrialResult>>],
    planners: &[String],
    budgets: &[f64],
    reference: Option<usize>,
) -> Result<StatsSummary, StatsError> {
    let scores: Vec<Vec<Vec<Scores>>> = results
        .iter()
        .map(|m| {
            m.iter()
                .map(|p| {
                    p.iter()
                        .map(|r| Scores {
                            info_gain_bits: r.info_gain_bits,
                            recognition: r.recognition,
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    summarize_scores(&scores, planners, budgets, reference)
}

/// The two reported metrics of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub info_gain_bits: f64,
    pub recognition: f64,
}

/// [`summarize`] on bare metric values, e.g. read back from a results table.
pub fn summarize_scores(
    results: &[Vec<Vec<Scores>>],
    planners: &[String],
    budgets: &[f64],
    reference: Option<usize>,
) -> Result<StatsSummary, StatsError> {
    if results.len() < 2 {
        return Err(StatsError::TooFew(results.len()));
    }
    let metric =
        |p: usize, b: usize, f: fn(&Scores) -> f64| -> Vec<f64> { results.iter().map(|m| f(&m[p][b])).collect() };
    let gain: fn(&Scores) -> f64 = |r| r.info_gain_bits;
    let rec: fn(&Scores) -> f64 = |r| r.recognition;
    let mut out = StatsSummary::default();
    for (bi, &budget) in budgets.iter().enumerate() {
        for (pi, name) in planners.iter().enumerate() {
            let (gm, gs) = mean_std(&metric(pi, bi, gain));
            let (rm, rs) = mean_std(&metric(pi, bi, rec));
            out.groups.push(GroupStats {
                planner: name.clone(),
                budget,
                n: results.len(),
                info_gain_mean: gm,
                info_gain_std: gs,
                recognition_mean: rm,
                recognition_std: rs,
            });
        }
        let pairs: Vec<(usize, usize)> = match reference {
            Some(r) => (0..planners.len()).filter(|&p| p != r).map(|p| (p, r)).collect(),
            None => (0..planners.len())
                .flat_map(|i| (i + 1..planners.len()).map(move |j| (i, j)))
                .collect(),
        };
        for (a, b) in pairs {
            for (name, f) in [("info_gain_bits", gain), ("recognition", rec)] {
                let (x, y) = (metric(a, bi, f), metric(b, bi, f));
                let t = paired_t_test(&x, &y)?;
                let d = cohens_d(&x, &y)?;
                out.comparisons.push(Comparison {
                    budget,
                    metric: name.into(),
                    planner: planners[a].clone(),
                    reference: planners[b].clone(),
                    planner_mean: mean_std(&x).0,
                    reference_mean: mean_std(&y).0,
                    t: t.t,
                    p: t.p,
                    d: d.d,
                    degenerate: t.degenerate,
                });
            }
        }
    }
    Ok(out)
}
