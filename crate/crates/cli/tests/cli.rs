use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn infogather(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infogather"))
        .args(args)
        .current_dir(dir)
        .env("INFOGATHER_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn world_gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = infogather(
            &["world-gen", "--scenario", "mars", "--seed", "1", "--out", out],
            tmp.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(tmp.path().join("a/world.json")).unwrap();
    assert_eq!(a, fs::read(tmp.path().join("b/world.json")).unwrap());
    assert!(tmp.path().join("a/config.json").exists());
}

#[test]
fn run_with_zero_budget_is_an_empty_mission() {
    let tmp = tempfile::tempdir().unwrap();
    let o = infogather(&["run", "--set", "budget=0", "--out", "r"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("r/result.json")).unwrap()).unwrap();
    assert_eq!(r["actions"].as_array().unwrap().len(), 0);
    assert_eq!(r["info_gain_bits"], 0.0);
    let cfg: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("r/config.json")).unwrap()).unwrap();
    assert_eq!(cfg["budget"], 0.0);
}

#[test]
fn run_on_a_saved_world_with_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let o = infogather(
        &["world-gen", "--scenario", "mvp", "--seed", "4", "--out", "w"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let args = [
        "run",
        "--world",
        "w/world.json",
        "--seed",
        "4",
        "--set",
        "scenario.kind=mvp",
        "--set",
        "planner.kind=lawnmower",
        "--set",
        "budget=60",
        "--out",
        "r",
    ];
    let o = infogather(&args, tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(tmp.path().join("r/trace.csv")).unwrap();
    assert!(trace.starts_with("step,budget_spent"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&infogather(&["frobnicate"], tmp.path())), 2);
    assert_eq!(code(&infogather(&["run", "--set", "budget=-3"], tmp.path())), 3);
    assert_eq!(
        code(&infogather(&["run", "--set", "planner.kind=teleport"], tmp.path())),
        3
    );
    assert_eq!(code(&infogather(&["experiment", "--preset", "nope"], tmp.path())), 3);
    assert_eq!(code(&infogather(&["experiment"], tmp.path())), 3);
    fs::write(tmp.path().join("broken.json"), "{ not json").unwrap();
    assert_eq!(code(&infogather(&["run", "--config", "broken.json"], tmp.path())), 3);
    // A goal further away than the budget allows only shows up at run time.
    let o = infogather(&["run", "--set", "scenario.kind=mvp", "--set", "budget=10"], tmp.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn experiment_preset_and_stats_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "experiment",
        "--preset",
        "mars-tables-1-2",
        "--maps",
        "2",
        "--set",
        "planners.3.iterations=10",
        "--set",
        "reference=mcts-10",
        "--out",
        "e",
    ];
    let o = infogather(&args, tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let results = fs::read_to_string(tmp.path().join("e/results.csv")).unwrap();
    // 4 planners x 3 budgets x 2 maps.
    assert_eq!(results.lines().count(), 1 + 24);
    let spec: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("e/experiment.json")).unwrap()).unwrap();
    assert_eq!(spec["n_maps"], 2);
    let o = infogather(
        &[
            "stats",
            "--results",
            "e/results.csv",
            "--reference",
            "mcts-10",
            "--out",
            "s",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = fs::read_to_string(tmp.path().join("e/stats.csv")).unwrap();
    let b = fs::read_to_string(tmp.path().join("s/stats.csv")).unwrap();
    assert_eq!(a.lines().count(), b.lines().count());
    assert_eq!(a.lines().next(), b.lines().next());
}

#[test]
fn replay_writes_one_directory_per_cost() {
    let tmp = tempfile::tempdir().unwrap();
    let o = infogather(
        &[
            "replay",
            "--maps",
            "2",
            "--set",
            "planners.1.iterations=5",
            "--set",
            "reference=mcts-5",
            "--out",
            "r",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for d in ["nss-2", "nss-5"] {
        assert!(tmp.path().join("r").join(d).join("alpha.csv").exists());
    }
}
