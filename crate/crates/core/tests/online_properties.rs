//! Online layer: linear optimizer regret, Hedge, the per-stage recursion and
//! whole-stream runs.

mod common;

use drsub_core::instances::{erdos_renyi, location_stream, sample_subgraph_stream, LocationParams};
use drsub_core::objectives::{Objective, QuadraticObjective};
use drsub_core::online::{
    run_online_baseline, run_online_experiment, stream_gradient_bound, FtrlOptimizer, Hedge, OnlineHybridState,
    OnlineMode, OnlineOptions, OLO_FEASIBILITY_TOL,
};
use drsub_core::polytope::{Decomposition, HPolytope};
use drsub_core::vecmath::{dot, l2_norm};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn bodies() -> Vec<(HPolytope<f64>, Vec<f64>, f64)> {
    let dec = mixed_qp(4, 1).1;
    let mut anchor = dec.y0().to_vec();
    anchor.resize(8, 0.0);
    vec![
        (HPolytope::unit_box(4), vec![0.5; 4], 2.0),
        (HPolytope::sum_equal(4, 1.0).unwrap(), vec![0.25; 4], 2f64.sqrt()),
        (dec.joint_polytope(), anchor, dec.joint_diameter_upper().unwrap()),
    ]
}

#[test]
fn constant_reward_converges_to_the_lp_optimum() {
    let mut r = rng(1);
    for (body, anchor, diam) in bodies() {
        let n = body.dim();
        let d: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let g = l2_norm(&d);
        let horizon = 400;
        let mut o = FtrlOptimizer::new(&body, anchor.clone(), diam, g, horizon).unwrap();
        let mut last = Vec::new();
        for _ in 0..horizon {
            last = o.next().unwrap();
            assert!(body.residual(&last) <= OLO_FEASIBILITY_TOL);
            o.feed(&d).unwrap();
        }
        let best = body.maximize_linear(&d).unwrap().objective;
        let gap = best - dot(&d, &last);
        assert!(gap <= diam * g / (horizon as f64).sqrt() + 1e-9, "gap {gap}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn regret_within_the_guarantee(k in 0usize..3, seed in 0u64..1000, horizon in 10usize..300) {
        let (body, anchor, diam) = bodies().swap_remove(k);
        let n = body.dim();
        let mut o = FtrlOptimizer::new(&body, anchor, diam, 1.0, horizon).unwrap();
        let mut r = rng(seed);
        let mut total = vec![0.0; n];
        let mut gained = 0.0;
        for _ in 0..horizon {
            let x = o.next().unwrap();
            prop_assert!(body.residual(&x) <= OLO_FEASIBILITY_TOL);
            let d: Vec<f64> = (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let d: Vec<f64> = d.iter().map(|v| v / (n as f64).sqrt()).collect();
            gained += dot(&d, &x);
            for (s, v) in total.iter_mut().zip(&d) {
                *s += v;
            }
            o.feed(&d).unwrap();
        }
        let best = body.maximize_linear(&total).unwrap().objective;
        prop_assert!(best - gained <= o.regret_bound() + 1e-6);
    }

    #[test]
    fn hedge_weights_stay_a_distribution(k in 1usize..8, seed in 0u64..1000) {
        let mut h = Hedge::<f64>::new(k, 50).unwrap();
        let mut r = rng(seed);
        for _ in 0..50 {
            let w = h.step().unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            let rewards: Vec<f64> = (0..k).map(|_| r.random::<f64>()).collect();
            h.feedback(&rewards).unwrap();
        }
    }
}

#[test]
fn hedge_regret_two_experts() {
    let mut h = Hedge::<f64>::new(2, 1000).unwrap();
    let mut expected = 0.0;
    for _ in 0..1000 {
        expected += h.step().unwrap()[0];
        h.feedback(&[1.0, 0.0]).unwrap();
    }
    assert!(expected >= 1000.0 - (500.0 * 2f64.ln()).sqrt() - 1.0);
    assert!(h.feedback(&[1.0, 0.0]).is_err());
    let mut h = Hedge::<f64>::new(2, 10).unwrap();
    h.step().unwrap();
    assert!(h.feedback(&[1.5, 0.0]).is_err());
}

#[test]
fn stage_feedback_norms_stay_bounded() {
    let mut r = rng(2);
    let params = LocationParams {
        locations: 8,
        ..LocationParams::default()
    };
    let stream = location_stream::<f64, _>(&params, 30, &mut r).unwrap();
    let dec = drsub_core::instances::location_constraint::<f64>(8).unwrap();
    let g = stream_gradient_bound(&stream).unwrap();
    let cap = 5f64.sqrt() * 2f64.exp() * g;
    for t_s in [0.0, 0.5, 1.0] {
        let mut s = OnlineHybridState::new(&dec, 0.1, t_s, stream.len(), g).unwrap();
        for f in &stream {
            s.step().unwrap();
            assert!(s.output_residual().unwrap() <= 1e-8);
            s.feedback(f).unwrap();
            for (i, v) in s.last_feedback().iter().enumerate() {
                let phase_one = i < (t_s * 10.0).round() as usize;
                let limit = if phase_one { cap } else { g };
                assert!(l2_norm(v) <= limit + 1e-12, "stage {i}: {} > {limit}", l2_norm(v));
            }
        }
        assert_eq!(s.audit().violations, 0);
        assert!(s.audit().checks > 0);
    }
}

#[test]
fn gradient_bound_dominates_sampled_gradients() {
    let (g, _) = revenue(10, 3);
    let mut r = rng(3);
    let stream = sample_subgraph_stream(&g, 6, 20, &mut r).unwrap();
    let bound = stream_gradient_bound(&stream).unwrap();
    for f in &stream {
        for _ in 0..50 {
            let x = random_point(10, &mut r);
            assert!(l2_norm(&f.gradient(&x).unwrap()) <= bound + 1e-12);
        }
    }
}

#[test]
fn flat_objective_repeats_the_same_output() {
    let flat = QuadraticObjective::<f64>::new(3, vec![0.0; 9], vec![0.0; 3], 1.0).unwrap();
    let dec = mixed_qp(3, 4).1;
    let mut s = OnlineHybridState::new(&dec, 0.25, 0.5, 10, 1.0).unwrap();
    let first = s.step().unwrap();
    s.feedback(&flat).unwrap();
    for _ in 0..5 {
        assert_eq!(s.step().unwrap(), first);
        s.feedback(&flat).unwrap();
    }
}

#[test]
fn meta_tracks_the_best_fixed_switch() {
    let (q, dec) = mixed_qp(5, 5);
    let l = 60;
    let stream: Vec<QuadraticObjective<f64>> = (0..l)
        .map(|k| if k % 3 == 0 { q.clone() } else { box_quadratic(5, 50 + k as u64) })
        .collect();
    let opts = OnlineOptions::new(0.25);
    let meta = run_online_experiment(&stream, &dec, &opts, OnlineMode::Meta).unwrap();
    let mut best = f64::NEG_INFINITY;
    for k in 0..=4 {
        let fixed = run_online_experiment(&stream, &dec, &opts, OnlineMode::Fixed { t_s: k as f64 / 4.0 }).unwrap();
        best = best.max(fixed.cumulative_value());
    }
    let slack = (l as f64 * 5f64.ln() / 2.0).sqrt();
    assert!(meta.cumulative_value() >= best - slack, "{} < {best} - {slack}", meta.cumulative_value());
    for s in &meta.steps {
        let w = s.expert_weights.as_ref().unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn runs_are_reproducible_byte_for_byte() {
    let make = || {
        let mut r = rng(6);
        let g = erdos_renyi::<f64, _>(30, 0.2, true, &mut r).unwrap().revenue(0.05).unwrap();
        sample_subgraph_stream(&g, 12, 15, &mut r).unwrap()
    };
    let dec = drsub_core::instances::revenue_constraint::<f64>(30).unwrap();
    let opts = OnlineOptions::new(0.2);
    let a = run_online_experiment(&make(), &dec, &opts, OnlineMode::Meta).unwrap().to_csv();
    let b = run_online_experiment(&make(), &dec, &opts, OnlineMode::Meta).unwrap().to_csv();
    assert_eq!(a, b);
    let a = run_online_baseline(&make(), &dec, &opts).unwrap();
    let b = run_online_baseline(&make(), &dec, &opts).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.max_residual() <= 1e-8);
}

#[test]
fn comparator_column_is_recorded() {
    let (obj, dec) = qp(4, 7);
    let stream = vec![obj.clone(); 4];
    let opts = OnlineOptions {
        comparator: Some(vec![0.0; 4]),
        ..OnlineOptions::new(0.5)
    };
    let run = run_online_experiment(&stream, &dec, &opts, OnlineMode::Fixed { t_s: 0.0 }).unwrap();
    let expect = obj.value(&[0.0; 4]).unwrap() / obj.value_upper();
    for s in &run.steps {
        assert!((s.comparator_value.unwrap() - expect).abs() < 1e-12);
    }
    assert!(run.to_csv().lines().next().unwrap().ends_with(",comparator_value"));
    let outside = OnlineOptions {
        comparator: Some(vec![1.0; 4]),
        ..OnlineOptions::new(0.5)
    };
    assert!(run_online_experiment(&stream, &dec, &outside, OnlineMode::Meta).is_err());
}

#[test]
fn subgraph_stream_keeps_the_expected_share_of_edges() {
    let (n, size, steps) = (60usize, 20usize, 400usize);
    let mut r = rng(8);
    let g = erdos_renyi::<f64, _>(n, 0.3, false, &mut r).unwrap().revenue(0.1).unwrap();
    let total = g.edge_count() as f64;
    let stream = sample_subgraph_stream(&g, size, steps, &mut r).unwrap();
    let shares: Vec<f64> = stream.iter().map(|f| f.edge_count() as f64 / total).collect();
    let mean = shares.iter().sum::<f64>() / steps as f64;
    let var = shares.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (steps - 1) as f64;
    // both endpoints drawn without replacement
    let expect = (size * (size - 1)) as f64 / (n * (n - 1)) as f64;
    assert!((mean - expect).abs() <= 3.0 * (var / steps as f64).sqrt(), "{mean} vs {expect}");
}

#[test]
fn random_graph_edge_count_is_binomial() {
    let (n, p) = (80usize, 0.15);
    let pairs = (n * (n - 1) / 2) as f64;
    let mut counts = Vec::new();
    for seed in 0..30 {
        let g = erdos_renyi::<f64, _>(n, p, false, &mut rng(100 + seed)).unwrap();
        counts.push(g.edges.len() as f64);
    }
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let sd = (pairs * p * (1.0 - p) / counts.len() as f64).sqrt();
    assert!((mean - pairs * p).abs() <= 3.0 * sd, "{mean} vs {}", pairs * p);
}

#[test]
fn singleton_body_feeds_nothing_back() {
    let pin = HPolytope::new(
        2,
        vec![
            drsub_core::polytope::Halfspace::eq(vec![(0, 1.0)], 0.3),
            drsub_core::polytope::Halfspace::eq(vec![(1, 1.0)], 0.1),
        ],
        false,
    )
    .unwrap();
    let dec = Decomposition::new(pin, HPolytope::origin(2)).unwrap();
    let stream = vec![box_quadratic(2, 9); 6];
    let run = run_online_experiment(&stream, &dec, &OnlineOptions::new(0.25), OnlineMode::Meta).unwrap();
    let v = run.steps[0].value_raw;
    assert!(run.steps.iter().all(|s| (s.value_raw - v).abs() < 1e-12));
}
