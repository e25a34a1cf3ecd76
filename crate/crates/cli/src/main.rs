//! `infogather`: generate maps, run missions and experiment ensembles, and
//! recompute statistics from result tables.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use infogather::mission::{
    preset, run_experiment, run_trial, summarize_scores, ExperimentSpec, MarsScenario, MissionConfig, MissionError,
    MvpScenario, ReplayScenario, Scenario, Scores, PRESETS,
};
use infogather::world::GroundTruth;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "infogather",
    version,
    about = "Budgeted multi-sensor information gathering missions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// JSON config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Deep config override, e.g. `--set planner.iterations=50`. Values are
    /// read as JSON, falling back to a plain string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScenarioArg {
    Mars,
    Mvp,
    Replay,
}

#[derive(Subcommand)]
enum Command {
    /// Write a ground-truth snapshot (`world.json`).
    WorldGen {
        #[arg(long, value_enum, default_value = "mars")]
        scenario: ScenarioArg,
        #[command(flatten)]
        common: Common,
    },
    /// Run one mission (`result.json`, `trace.csv`, `decisions.jsonl`).
    Run {
        /// Ground-truth snapshot to run on instead of generating one.
        #[arg(long)]
        world: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an experiment ensemble from a preset or a config.
    Experiment {
        #[arg(long, help = format!("Named protocol: {}", PRESETS.join(", ")))]
        preset: Option<String>,
        /// Number of maps per experiment.
        #[arg(long)]
        maps: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Replay experiments on recorded soft readings.
    Replay {
        /// CSV of per-cell soft readings; a synthetic set is used otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        maps: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute summary and paired statistics from a `results.csv`.
    Stats {
        #[arg(long)]
        results: PathBuf,
        /// Planner label the others are compared with; all pairs otherwise.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Failure classes with distinct exit codes.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn mission_err(e: MissionError) -> Failure {
    match e {
        MissionError::Config(_) => Failure::Config(e.into()),
        other => Failure::Runtime(other.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Ok(v) = std::env::var("INFOGATHER_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                infogather::par::configure_threads(n);
            }
            _ => {
                eprintln!("error: INFOGATHER_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(3);
            }
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::WorldGen { scenario, common } => world_gen(scenario, &common),
        Command::Run { world, common } => run(world.as_deref(), &common),
        Command::Experiment { preset, maps, common } => {
            let specs = experiment_specs(preset.as_deref(), &common)?;
            experiment(specs, maps, &common)
        }
        Command::Replay { data, maps, common } => {
            let mut specs = experiment_specs(
                if common.config.is_some() {
                    None
                } else {
                    Some("mvp-replay")
                },
                &common,
            )?;
            for s in &mut specs {
                let Scenario::Replay(r) = &mut s.base.scenario else {
                    return Err(config_err(anyhow!("replay needs a replay scenario")));
                };
                if let Some(d) = &data {
                    r.data = Some(d.display().to_string());
                }
            }
            experiment(specs, maps, &common)
        }
        Command::Stats {
            results,
            reference,
            out,
        } => stats(&results, reference.as_deref(), &out),
    }
}

/// Loads `path` (or the default) as JSON, applies `--set` overrides and
/// deserializes the result.
fn load<T: Serialize + DeserializeOwned>(path: Option<&Path>, default: T, sets: &[String]) -> Result<T, Failure> {
    let mut v = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(config_err)?;
            serde_json::from_str::<Value>(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(config_err)?
        }
        None => serde_json::to_value(default).expect("serializable"),
    };
    for s in sets {
        apply_set(&mut v, s).map_err(config_err)?;
    }
    serde_json::from_value(v)
        .context("config does not match the schema")
        .map_err(config_err)
}

fn apply_set(root: &mut Value, assignment: &str) -> anyhow::Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override {assignment:?} is not KEY=VALUE"))?;
    if key.is_empty() {
        bail!("override {assignment:?} has an empty key");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .with_context(|| format!("{key}: {part:?} is not an index"))?;
                items
                    .get_mut(idx)
                    .ok_or_else(|| anyhow!("{key}: index {idx} out of range"))?
            }
            Value::Object(map) => map.entry(part.to_string()).or_insert(Value::Null),
            Value::Null => {
                *cur = Value::Object(Default::default());
                cur.as_object_mut()
                    .unwrap()
                    .entry(part.to_string())
                    .or_insert(Value::Null)
            }
            _ => bail!("{key}: {part:?} is inside a non-object value"),
        };
        if last {
            *cur = value;
            return Ok(());
        }
    }
    unreachable!("keys have at least one part")
}

fn write_json(path: &Path, v: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_out(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(Failure::Runtime)
}

fn mission_config(default: MissionConfig, common: &Common) -> Result<MissionConfig, Failure> {
    let mut cfg = load(common.config.as_deref(), default, &common.set)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn world_gen(scenario: ScenarioArg, common: &Common) -> Result<(), Failure> {
    let default = MissionConfig {
        scenario: match scenario {
            ScenarioArg::Mars => Scenario::Mars(MarsScenario::default()),
            ScenarioArg::Mvp => Scenario::Mvp(MvpScenario::default()),
            ScenarioArg::Replay => Scenario::Replay(ReplayScenario::default()),
        },
        ..MissionConfig::default()
    };
    let cfg = mission_config(default, common)?;
    let world = cfg.world().map_err(mission_err)?;
    create_out(&common.out)?;
    write_json(&common.out.join("config.json"), &cfg)?;
    fs::write(common.out.join("world.json"), world.to_json() + "\n").context("writing world.json")?;
    println!(
        "world {}x{} checksum {:016x} -> {}",
        world.grid().width,
        world.grid().height,
        world.checksum(),
        common.out.display()
    );
    Ok(())
}

fn run(world: Option<&Path>, common: &Common) -> Result<(), Failure> {
    let cfg = mission_config(MissionConfig::default(), common)?;
    let truth = match world {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(config_err)?;
            GroundTruth::from_json(&text).map_err(config_err)?
        }
        None => cfg.world().map_err(mission_err)?,
    };
    let r = run_trial(&cfg, &truth).map_err(mission_err)?;
    create_out(&common.out)?;
    write_json(&common.out.join("config.json"), &cfg)?;
    write_json(&common.out.join("result.json"), &r)?;
    let mut trace = String::from("step,budget_spent,info_gain_bits,recognition\n");
    for (i, s) in r.trace.iter().enumerate() {
        trace += &format!("{i},{},{},{}\n", s.budget_spent, s.info_gain_bits, s.recognition);
    }
    fs::write(common.out.join("trace.csv"), trace).context("writing trace.csv")?;
    let mut log = fs::File::create(common.out.join("decisions.jsonl")).context("writing decisions.jsonl")?;
    for d in &r.actions {
        writeln!(log, "{}", serde_json::to_string(d).expect("serializable")).context("writing decisions.jsonl")?;
    }
    println!(
        "{} budget {} spent {} gain {:.3} bits recognition {:.4} ({} actions)",
        r.planner,
        r.budget,
        r.budget_spent,
        r.info_gain_bits,
        r.recognition,
        r.actions.len()
    );
    Ok(())
}

fn experiment_specs(name: Option<&str>, common: &Common) -> Result<Vec<ExperimentSpec>, Failure> {
    match (name, &common.config) {
        (Some(_), Some(_)) => Err(config_err(anyhow!("give either --preset or --config, not both"))),
        (Some(n), None) => {
            let specs =
                preset(n).ok_or_else(|| config_err(anyhow!("unknown preset {n:?}; known: {}", PRESETS.join(", "))))?;
            specs.into_iter().map(|s| load(None, s, &common.set)).collect()
        }
        (None, Some(p)) => Ok(vec![load(Some(p), ExperimentSpec::default(), &common.set)?]),
        (None, None) => Err(config_err(anyhow!("experiment needs --preset or --config"))),
    }
}

fn experiment(mut specs: Vec<ExperimentSpec>, maps: Option<usize>, common: &Common) -> Result<(), Failure> {
    for s in &mut specs {
        if let Some(m) = maps {
            s.n_maps = m;
        }
        if let Some(seed) = common.seed {
            s.seed = seed;
        }
        s.validate().map_err(config_err)?;
    }
    create_out(&common.out)?;
    let nested = specs.len() > 1;
    for s in &specs {
        let dir = if nested {
            common.out.join(&s.name)
        } else {
            common.out.clone()
        };
        let out = run_experiment(s).map_err(mission_err)?;
        out.write_dir(&dir).map_err(mission_err)?;
        println!("{}: {} trials -> {}", s.name, out.trials().count(), dir.display());
        for g in &out.stats.groups {
            println!(
                "  {:<12} budget {:>5}  gain {:8.3} ± {:7.3}  recognition {:.4} ± {:.4}",
                g.planner, g.budget, g.info_gain_mean, g.info_gain_std, g.recognition_mean, g.recognition_std
            );
        }
    }
    Ok(())
}

fn stats(results: &Path, reference: Option<&str>, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(results)
        .with_context(|| format!("reading {}", results.display()))
        .map_err(config_err)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| config_err(anyhow!("results table lacks a {name:?} column")))
    };
    let (cm, cp, cb, cg, cr) = (
        col("map_id")?,
        col("planner")?,
        col("budget")?,
        col("info_gain_bits")?,
        col("recognition")?,
    );
    let mut maps: Vec<usize> = Vec::new();
    let mut planners: Vec<String> = Vec::new();
    let mut budgets: Vec<f64> = Vec::new();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || config_err(anyhow!("row {}: malformed", n + 2));
        let get = |i: usize| f.get(i).copied().ok_or_else(bad);
        let m: usize = get(cm)?.parse().map_err(|_| bad())?;
        let p = get(cp)?.to_string();
        let b: f64 = get(cb)?.parse().map_err(|_| bad())?;
        let s = Scores {
            info_gain_bits: get(cg)?.parse().map_err(|_| bad())?,
            recognition: get(cr)?.parse().map_err(|_| bad())?,
        };
        if !maps.contains(&m) {
            maps.push(m);
        }
        if !planners.contains(&p) {
            planners.push(p.clone());
        }
        if !budgets.contains(&b) {
            budgets.push(b);
        }
        rows.push((m, p, b, s));
    }
    maps.sort_unstable();
    let mut table: Vec<Vec<Vec<Option<Scores>>>> = vec![vec![vec![None; budgets.len()]; planners.len()]; maps.len()];
    for (m, p, b, s) in rows {
        let mi = maps.binary_search(&m).expect("collected");
        let pi = planners.iter().position(|x| *x == p).expect("collected");
        let bi = budgets.iter().position(|x| *x == b).expect("collected");
        if table[mi][pi][bi].replace(s).is_some() {
            return Err(config_err(anyhow!("duplicate row for map {m}, {p}, budget {b}")));
        }
    }
    let table: Vec<Vec<Vec<Scores>>> = table
        .into_iter()
        .zip(&maps)
        .map(|(mt, m)| {
            mt.into_iter()
                .zip(&planners)
                .map(|(pt, p)| {
                    pt.into_iter()
                        .zip(&budgets)
                        .map(|(s, b)| s.ok_or_else(|| config_err(anyhow!("missing row for map {m}, {p}, budget {b}"))))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let reference = match reference {
        Some(r) => Some(
            planners
                .iter()
                .position(|p| p == r)
                .ok_or_else(|| config_err(anyhow!("reference {r:?} is not in the table")))?,
        ),
        None => None,
    };
    let summary = summarize_scores(&table, &planners, &budgets, reference).map_err(config_err)?;
    create_out(out)?;
    let file = |n: &str| fs::File::create(out.join(n)).with_context(|| format!("writing {n}"));
    summary.write_groups(file("summary.csv")?).map_err(mission_err)?;
    summary.write_comparisons(file("stats.csv")?).map_err(mission_err)?;
    for c in summary.comparisons.iter() {
        println!(
            "budget {:>5} {:<15} {} vs {}: t {:.3} p {:.3e} d {:.3}{}",
            c.budget,
            c.metric,
            c.planner,
            c.reference,
            c.t,
            c.p,
            c.d,
            if c.degenerate { " (degenerate)" } else { "" }
        );
    }
    Ok(())
}
