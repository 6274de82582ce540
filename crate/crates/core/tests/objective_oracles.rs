//! Objective oracles against independent recomputations.

mod common;

use drsub_core::objectives::{
    dr_probe, fd_gradient_check, make_qp_instance, qp_offset, sampled_lipschitz, subset_expansion_gap, Objective,
    QpDistribution, QuadraticObjective, RevenueObjective,
};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn families(seed: u64) -> Vec<Box<dyn Objective<f64>>> {
    vec![
        Box::new(qp(5, seed).0),
        Box::new(revenue(7, seed).0),
        Box::new(location(6, seed).0),
        Box::new(box_quadratic(4, seed)),
    ]
}

#[test]
fn quadratic_value_by_hand() {
    let mut r = rng(10);
    let q = box_quadratic(4, 10);
    for _ in 0..20 {
        let x = random_point(4, &mut r);
        let (h, l) = (q.hessian(), q.linear());
        let mut v = q.offset();
        for i in 0..4 {
            v += l[i] * x[i];
            for j in 0..4 {
                v += 0.5 * h[i * 4 + j] * x[i] * x[j];
            }
        }
        assert!((q.value(&x).unwrap() - v).abs() < 1e-12);
    }
}

#[test]
fn qp_offset_is_the_box_minimum() {
    // exhaustive over the vertices of a small box, against the Gray-code walk
    let mut r = rng(11);
    for _ in 0..10 {
        let n = 5;
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = -r.random::<f64>();
                h[i * n + j] = v;
                h[j * n + i] = v;
            }
        }
        let l: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| r.random_range(0.2..2.0)).collect();
        let mut low = 0.0f64;
        for mask in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|j| if mask & (1 << j) != 0 { u[j] } else { 0.0 }).collect();
            let q = QuadraticObjective::new(n, h.clone(), l.clone(), 0.0).unwrap();
            low = low.min(q.value(&x).unwrap());
        }
        assert!((qp_offset(&h, &l, &u).unwrap() + low).abs() < 1e-12);
    }
}

#[test]
fn generated_qps_are_non_negative_on_the_box() {
    for seed in 0..10 {
        for dist in [QpDistribution::Uniform, QpDistribution::Exponential] {
            let inst = make_qp_instance::<f64>(6, 6, dist, seed).unwrap();
            let mut r = rng(seed);
            for _ in 0..200 {
                let x = random_point(6, &mut r);
                assert!(inst.objective.value(&x).unwrap() >= -1e-12);
            }
        }
    }
}

#[test]
fn location_matches_set_function_at_vertices() {
    let (obj, _) = location(7, 12);
    for mask in 0u32..(1 << 7) {
        let set: Vec<bool> = (0..7).map(|j| mask & (1 << j) != 0).collect();
        let x: Vec<f64> = set.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect();
        assert!((obj.value(&x).unwrap() - obj.discrete_value(&set).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn revenue_is_invariant_under_relabelling() {
    let (obj, _) = revenue(8, 13);
    let mut r = rng(13);
    let perm: Vec<usize> = {
        let mut p: Vec<usize> = (0..8).collect();
        for i in (1..8).rev() {
            p.swap(i, r.random_range(0..=i));
        }
        p
    };
    let moved: Vec<(usize, usize, f64)> = obj.edges().into_iter().map(|(u, v, w)| (perm[u], perm[v], w)).collect();
    let other = RevenueObjective::from_edges(8, &moved, obj.p()).unwrap();
    for _ in 0..20 {
        let x = random_point(8, &mut r);
        let mut y = vec![0.0; 8];
        for i in 0..8 {
            y[perm[i]] = x[i];
        }
        assert!((obj.value(&x).unwrap() - other.value(&y).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn non_dr_control_is_caught() {
    let q = QuadraticObjective::new_unsigned(2, vec![0.0, 1.0, 1.0, 0.0], vec![0.1, 0.1], 0.0).unwrap();
    let rep = dr_probe(&q, 200, 1e-9, &mut rng(14)).unwrap();
    assert!(rep.gradient_order > 0);
}

#[test]
fn dr_families_pass_the_probe() {
    for seed in 0..3 {
        for obj in families(seed) {
            let rep = dr_probe(obj.as_ref(), 300, 1e-9, &mut rng(15 + seed)).unwrap();
            assert_eq!(rep.violations(), 0, "{rep:?}");
        }
    }
}

#[test]
fn smoothness_and_value_bounds_hold() {
    for seed in 0..3 {
        for obj in families(seed) {
            let mut r = rng(16 + seed);
            let lip = sampled_lipschitz(obj.as_ref(), 300, &mut r).unwrap();
            assert!(obj.beta() >= lip - 1e-12, "beta {} below sampled {lip}", obj.beta());
            for _ in 0..200 {
                let x = random_point(obj.dim(), &mut r);
                let v = obj.value(&x).unwrap();
                assert!(v >= -1e-12 && v <= obj.value_upper() + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradients_match_central_differences(seed in 0u64..500, raw in prop::collection::vec(0.01f64..0.99, 7)) {
        for obj in families(seed) {
            let x = &raw[..obj.dim()];
            prop_assert!(fd_gradient_check(obj.as_ref(), x, 1e-5).unwrap() <= 1e-5);
        }
    }

    #[test]
    fn subset_expansion_holds(seed in 0u64..500, count in 1usize..4,
                              pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 7), 3),
                              probs in prop::collection::vec(0.0f64..1.0, 3)) {
        for obj in families(seed) {
            let xs: Vec<Vec<f64>> = pts[..count].iter().map(|p| p[..obj.dim()].to_vec()).collect();
            prop_assert!(subset_expansion_gap(obj.as_ref(), &xs, &probs[..count]).unwrap() >= -1e-9);
        }
    }
}
