mod common;

use common::{expectimax, strip_entropy, Strip};
use infogather::geom::Pose;
use infogather::planning::{greedy_step, mcts_step, Domain, PlannerConfig};
use infogather::rng::{stream, Stream};

#[test]
fn expectimax_one_step_is_the_single_read_gain() {
    let d = Strip::new(vec![0.8, 0.7, 0.9, 0.6]);
    let b = vec![0.3, 0.5, 0.6, 0.5];
    let h0 = strip_entropy(&b);
    let v = expectimax(&d, &b, 0, 1);
    for (a, cell) in [(0, 0), (1, 1)] {
        let mut want = 0.0;
        for z in 0..2 {
            let (post, pz) = d.read(&b, cell, z);
            let mut n = b.clone();
            n[cell] = post;
            want += pz * ((h0 - strip_entropy(&n)) / h0).clamp(0.0, 1.0);
        }
        assert!((v[a].unwrap() - want).abs() < 1e-12);
    }
    assert_eq!(expectimax(&d, &b, 3, 2)[1], None);
}

#[test]
fn mcts_finds_the_expectimax_action() {
    let cases = [
        (vec![0.9, 0.6, 0.95, 0.7], vec![0.5; 4]),
        (vec![0.8; 4], vec![0.3, 0.5, 0.6, 0.5]),
    ];
    for (acc, b) in cases {
        let d = Strip::new(acc);
        let v = expectimax(&d, &b, 0, 3);
        let best = if v[1].unwrap() > v[0].unwrap() { 1 } else { 0 };
        let cfg = PlannerConfig {
            iterations: 10_000,
            ..Default::default()
        };
        let hits = (0..50)
            .filter(|&s| {
                mcts_step(&d, &b, &Pose::at(0, 0), 3.0, &cfg, &mut stream(s, Stream::Planner))
                    .unwrap()
                    .action
                    == best
            })
            .count();
        assert!(hits >= 48, "{hits}/50");
    }
}

#[test]
fn planners_are_pure_functions_of_their_inputs() {
    let d = Strip::new(vec![0.8, 0.7, 0.9, 0.6]);
    let b = vec![0.3, 0.5, 0.6, 0.5];
    let cfg = PlannerConfig {
        iterations: 300,
        n_samples: 10,
        ..Default::default()
    };
    let p = Pose::at(1, 0);
    for seed in 0..5 {
        let m = |s| mcts_step(&d, &b, &p, 2.0, &cfg, &mut stream(s, Stream::Planner)).unwrap();
        let g = |s| greedy_step(&d, &b, &p, 2.0, &cfg, &mut stream(s, Stream::Planner)).unwrap();
        assert_eq!(m(seed), m(seed));
        assert_eq!(g(seed), g(seed));
    }
    assert!(d.entropy(&b) > 0.0);
}
