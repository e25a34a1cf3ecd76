use super::{run_trial, summarize, MissionConfig, MissionError, Scenario, StatsSummary, TrialResult, WallMs};
use crate::par::Exec;
use crate::planning::PlannerConfig;
use crate::rng::derive_seed;
use crate::world::GroundTruth;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

/// Every planner on every map and budget. Maps and start poses are shared
/// across planners so results pair by map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: MissionConfig,
    pub planners: Vec<PlannerConfig>,
    pub budgets: Vec<f64>,
    pub n_maps: usize,
    /// Master seed; map `i` uses `derive_seed(seed, [i])`.
    pub seed: u64,
    /// Label of the planner the others are compared with; all pairs when
    /// unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// How trials are scheduled. Results do not depend on it.
    pub exec: Exec,
    /// Record wall time per trial. Off, `wall_ms` is written as 0 and reruns
    /// produce byte-identical files.
    pub wall_clock: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "experiment".into(),
            base: MissionConfig::default(),
            planners: vec![PlannerConfig::default()],
            budgets: vec![100.0],
            n_maps: 2,
            seed: 0,
            reference: None,
            exec: Exec::default(),
            wall_clock: true,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), MissionError> {
        let bad = |m: &str| Err(MissionError::Config(m.to_string()));
        if self.n_maps < 2 {
            return bad("n_maps must be at least 2 for paired statistics");
        }
        if self.planners.is_empty() || self.budgets.is_empty() {
            return bad("need at least one planner and one budget");
        }
        if let Some(r) = &self.reference {
            if !self.planners.iter().any(|p| &p.label() == r) {
                return bad("reference planner is not in the planner list");
            }
        }
        for p in &self.planners {
            for &b in &self.budgets {
                MissionConfig {
                    planner: p.clone(),
                    budget: b,
                    ..self.base.clone()
                }
                .validate()?;
            }
        }
        Ok(())
    }

    pub fn map_seed(&self, map: usize) -> u64 {
        derive_seed(self.seed, &[map as u64])
    }

    pub fn labels(&self) -> Vec<String> {
        self.planners.iter().map(|p| p.label()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub spec: ExperimentSpec,
    /// `results[map][planner][budget]`.
    pub results: Vec<Vec<Vec<TrialResult>>>,
    pub stats: StatsSummary,
}

/// Runs the whole ensemble and aggregates it.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, MissionError> {
    spec.validate()?;
    let (np, nb) = (spec.planners.len(), spec.budgets.len());
    let dataset = match &spec.base.scenario {
        Scenario::Replay(s) => Some(s.dataset()?),
        _ => None,
    };
    let worlds: Vec<GroundTruth> = spec
        .exec
        .map_range(spec.n_maps, |m| {
            let cfg = MissionConfig {
                seed: spec.map_seed(m),
                ..spec.base.clone()
            };
            match (&dataset, &spec.base.scenario) {
                (Some(d), Scenario::Replay(s)) => Ok(GroundTruth::Mvp(d.layout(s.synthetic.grid, cfg.seed)?)),
                _ => cfg.world(),
            }
        })
        .into_iter()
        .collect::<Result<_, MissionError>>()?;
    let flat = spec.exec.map_range(spec.n_maps * np * nb, |job| {
        let (m, p, b) = (job / (np * nb), job / nb % np, job % nb);
        let cfg = MissionConfig {
            planner: spec.planners[p].clone(),
            budget: spec.budgets[b],
            seed: spec.map_seed(m),
            ..spec.base.clone()
        };
        run_trial(&cfg, &worlds[m]).map(|mut r| {
            r.map_id = m;
            if !spec.wall_clock {
                r.wall_ms = WallMs(0.0);
            }
            r
        })
    });
    let mut flat = flat.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter();
    let results: Vec<Vec<Vec<TrialResult>>> = (0..spec.n_maps)
        .map(|_| (0..np).map(|_| flat.by_ref().take(nb).collect()).collect())
        .collect();
    let labels = spec.labels();
    let reference = spec.reference.as_ref().and_then(|r| labels.iter().position(|l| l == r));
    let stats = summarize(&results, &labels, &spec.budgets, reference)?;
    Ok(ExperimentOutput {
        spec: spec.clone(),
        results,
        stats,
    })
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

impl ExperimentOutput {
    pub fn trials(&self) -> impl Iterator<Item = &TrialResult> {
        self.results.iter().flatten().flatten()
    }

    /// True when, for every map, all trials saw the same map and start.
    pub fn is_paired(&self) -> bool {
        self.results.iter().all(|m| {
            let first = &m[0][0];
            m.iter()
                .flatten()
                .all(|r| r.world_checksum == first.world_checksum && r.start == first.start)
        })
    }

    pub fn write_results<W: Write>(&self, w: W) -> Result<(), MissionError> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| MissionError::Io(e.to_string());
        out.write_record([
            "map_id",
            "planner",
            "budget",
            "info_gain_bits",
            "recognition",
            "budget_spent",
            "wall_ms",
        ])
        .map_err(err)?;
        for r in self.trials() {
            out.write_record([
                r.map_id.to_string(),
                r.planner.clone(),
                fmt(r.budget),
                fmt(r.info_gain_bits),
                fmt(r.recognition),
                fmt(r.budget_spent),
                format!("{:.3}", r.wall_ms.0),
            ])
            .map_err(err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_stats<W: Write>(&self, w: W) -> Result<(), MissionError> {
        self.stats.write_comparisons(w)
    }

    pub fn write_summary<W: Write>(&self, w: W) -> Result<(), MissionError> {
        self.stats.write_groups(w)
    }

    /// Final Dirichlet parameters per terrain/water trial, one row per water
    /// class.
    pub fn write_alpha<W: Write>(&self, w: W) -> Result<(), MissionError> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| MissionError::Io(e.to_string());
        let nt = self
            .trials()
            .find_map(|r| r.alpha.as_ref().map(|a| a.n_terrain))
            .unwrap_or(0);
        let mut header = vec!["map_id".to_string(), "planner".into(), "budget".into(), "water".into()];
        header.extend((1..=nt).map(|t| format!("terrain_{t}")));
        out.write_record(&header).map_err(err)?;
        for r in self.trials() {
            let Some(a) = &r.alpha else { continue };
            for wc in 0..a.n_water {
                let mut row = vec![r.map_id.to_string(), r.planner.clone(), fmt(r.budget), wc.to_string()];
                row.extend((0..a.n_terrain).map(|t| fmt(a.get(wc, t))));
                out.write_record(&row).map_err(err)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// One JSON object per decision, tagged with its trial.
    pub fn write_decisions<W: Write>(&self, mut w: W) -> Result<(), MissionError> {
        for r in self.trials() {
            for d in &r.actions {
                let line = serde_json::json!({
                    "map_id": r.map_id,
                    "planner": r.planner,
                    "budget": r.budget,
                    "decision": d,
                });
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }

    /// Writes `experiment.json`, `results.csv`, `summary.csv`, `stats.csv`,
    /// `decisions.jsonl` and, for terrain/water scenarios, `alpha.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), MissionError> {
        fs::create_dir_all(dir)?;
        let file = |name: &str| fs::File::create(dir.join(name)).map(std::io::BufWriter::new);
        fs::write(
            dir.join("experiment.json"),
            serde_json::to_string_pretty(&self.spec).expect("serializable") + "\n",
        )?;
        self.write_results(file("results.csv")?)?;
        self.write_summary(file("summary.csv")?)?;
        self.write_stats(file("stats.csv")?)?;
        self.write_decisions(file("decisions.jsonl")?)?;
        if self.trials().any(|r| r.alpha.is_some()) {
            self.write_alpha(file("alpha.csv")?)?;
        }
        Ok(())
    }
}

impl StatsSummary {
    pub fn write_comparisons<W: Write>(&self, w: W) -> Result<(), MissionError> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| MissionError::Io(e.to_string());
        out.write_record([
            "budget",
            "metric",
            "planner",
            "reference",
            "planner_mean",
            "reference_mean",
            "t",
            "p",
            "d",
            "degenerate",
        ])
        .map_err(err)?;
        for c in &self.comparisons {
            out.write_record([
                fmt(c.budget),
                c.metric.clone(),
                c.planner.clone(),
                c.reference.clone(),
                fmt(c.planner_mean),
                fmt(c.reference_mean),
                fmt(c.t),
                fmt(c.p),
                fmt(c.d),
                c.degenerate.to_string(),
            ])
            .map_err(err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_groups<W: Write>(&self, w: W) -> Result<(), MissionError> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| MissionError::Io(e.to_string());
        out.write_record([
            "planner",
            "budget",
            "n",
            "info_gain_mean",
            "info_gain_std",
            "recognition_mean",
            "recognition_std",
        ])
        .map_err(err)?;
        for g in &self.groups {
            out.write_record([
                g.planner.clone(),
                fmt(g.budget),
                g.n.to_string(),
                fmt(g.info_gain_mean),
                fmt(g.info_gain_std),
                fmt(g.recognition_mean),
                fmt(g.recognition_std),
            ])
            .map_err(err)?;
        }
        out.flush()?;
        Ok(())
    }
}
