use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use infogather::belief::KernelSpec;
use infogather::geom::{Cell, Pose};
use infogather::learning::{DirichletParams, MvpBelief, MvpModel};
use infogather::mission::{preset, run_experiment, ExperimentSpec};
use infogather::par::Exec;
use infogather::planning::{expected_utility_mc, mvp_actions, Domain, MvpDomain};
use infogather::world::MvpWorldConfig;
use std::sync::Arc;

const SCHEDULERS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn greedy_samples(c: &mut Criterion) {
    let w = MvpWorldConfig::default();
    let model = Arc::new(MvpModel::new(w.grid, w.n_terrain, w.n_water, 0.1, 0.05, KernelSpec::default()).unwrap());
    let belief = MvpBelief::new(
        Arc::clone(&model),
        DirichletParams::uniform(w.n_water, w.n_terrain, 1.0),
    )
    .unwrap();
    let domain = MvpDomain {
        model,
        actions: mvp_actions(5.0),
        goal: Some(Cell::new(19, 19)),
    };
    let action = domain.actions()[1];
    let mut g = c.benchmark_group("expected_utility_mc");
    for (name, exec) in SCHEDULERS {
        g.bench_function(BenchmarkId::new(name, 400), |b| {
            b.iter(|| expected_utility_mc(&domain, &belief, &Pose::at(0, 0), &action, 400, 1, exec))
        });
    }
    g.finish();
}

fn experiments(c: &mut Criterion) {
    let base = ExperimentSpec {
        n_maps: 4,
        budgets: vec![50.0],
        wall_clock: false,
        ..preset("mars-tables-1-2").unwrap().remove(0)
    };
    let mut g = c.benchmark_group("mars_experiment");
    g.sample_size(10);
    for (name, exec) in SCHEDULERS {
        let spec = ExperimentSpec { exec, ..base.clone() };
        g.bench_function(name, |b| b.iter(|| run_experiment(&spec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, greedy_samples, experiments);
criterion_main!(benches);
