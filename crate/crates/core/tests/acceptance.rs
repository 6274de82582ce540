//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the report is printed even when every
//! criterion passes.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use drsub_core::instances::{erdos_renyi, revenue_constraint, sample_subgraph_stream};
use drsub_core::objectives::{dr_probe, fd_gradient_check, subset_expansion_gap, Objective};
use drsub_core::offline::{
    grid_opt, reference_opt, run_alg1, run_alg2, run_alg2_grid, run_alg3, run_alg3_grid, run_fw_downclosed,
    run_fw_general, theorem1_value, AscentOptions, InvariantKind, Trace, Variant,
};
use drsub_core::online::{run_online_baseline, run_online_experiment, FtrlOptimizer, OnlineMode, OnlineOptions};
use drsub_core::polytope::{Decomposition, HPolytope};
use drsub_core::vecmath::{dot, linf_norm};
use rand::Rng;

use common::*;

const MEMBERSHIP_TOL: f64 = 1e-8;
const NORM_SLACK: f64 = 1e-9;
const RECOVERY_SLACK: f64 = 0.1;
const ORDERING_GAP: f64 = 0.03;
const ORDERING_BAND: f64 = 0.05;
const ORACLE_TOL: f64 = 1e-9;
const FD_TOL: f64 = 1e-5;
const TRAJECTORY_TOL: f64 = 1e-9;
const ONLINE_GAP: f64 = 0.05;
const BOUND_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- 1

#[derive(Default)]
struct Audit {
    records: usize,
    worst_membership: f64,
    worst_norm: f64,
    flagged: usize,
}

impl Audit {
    fn membership(&mut self, r: f64) {
        self.worst_membership = self.worst_membership.max(r);
    }
    fn norm(&mut self, excess: f64) {
        self.worst_norm = self.worst_norm.max(excess);
    }
    fn ok(&self) -> bool {
        self.worst_membership <= MEMBERSHIP_TOL && self.worst_norm <= NORM_SLACK && self.flagged == 0
    }
}

fn audit_trace(trace: &Trace<f64>, dec: &Decomposition<f64>, lifted: bool, audit: &mut Audit) {
    let eps = trace.epsilon;
    let m = trace.m;
    for r in &trace.records {
        audit.records += 1;
        let scale = eps * r.i as f64;
        if lifted {
            audit.membership(dec.general().residual(&r.y));
            audit.membership(dec.down().residual(&r.z));
        } else {
            // the down-closed baseline works in D alone: y stays 0 and w = z
            if trace.variant != Variant::FwDown {
                audit.membership(dec.general().residual(&r.y));
                audit.membership(dec.membership_residual(&r.w).unwrap());
            }
            audit.membership(dec.down().residual_scaled(&r.z, scale));
            let decay = (1.0 - eps).powi(r.i as i32);
            audit.norm(linf_norm(&r.z) - (1.0 - decay));
            audit.norm(linf_norm(&r.w) - (1.0 - decay * (1.0 - m)));
        }
        if lifted {
            audit.membership(dec.membership_residual(&r.w).unwrap());
        }
    }
    audit.flagged += trace
        .invariant_violations
        .iter()
        .filter(|v| !matches!(v.kind, InvariantKind::Potential))
        .count();
}

fn audit_all<F: Objective<f64>>(obj: &F, dec: &Decomposition<f64>, audit: &mut Audit) {
    let eps = 0.05;
    let fw = run_fw_downclosed(obj, dec.down(), eps).unwrap();
    audit_trace(&fw, dec, false, audit);
    audit_trace(&run_fw_general(obj, dec, eps).unwrap(), dec, true, audit);
    let p1 = fw.best.value.max(0.0);
    audit_trace(&run_alg1(obj, dec, eps, p1).unwrap(), dec, false, audit);
    for t_s in [0.0, 0.5, 1.0] {
        audit_trace(&run_alg2(obj, dec, eps, t_s).unwrap(), dec, false, audit);
        audit_trace(&run_alg3(obj, dec, eps, t_s).unwrap(), dec, false, audit);
    }
    let stream = vec![obj; 5];
    let run = run_online_experiment(&stream, dec, &OnlineOptions::new(eps), OnlineMode::Fixed { t_s: 0.5 }).unwrap();
    audit.membership(run.max_residual());
    audit.flagged += run.stage_violations;
}

fn criterion_1() -> Outcome {
    let mut audit = Audit::default();
    for seed in 0..20u64 {
        let n = 4 + (seed as usize % 9);
        let (obj, dec) = if seed % 2 == 0 { qp(n, seed) } else { mixed_qp(n, seed) };
        audit_all(&obj, &dec, &mut audit);
        let (obj, dec) = revenue(6 + seed as usize % 7, 100 + seed);
        audit_all(&obj, &dec, &mut audit);
        let (obj, dec) = location(6 + seed as usize % 7, 200 + seed);
        audit_all(&obj, &dec, &mut audit);
    }
    outcome(
        audit.ok(),
        format!(
            "{} iterates over 60 instances, worst membership residual {:.2e} (<= {MEMBERSHIP_TOL:e}), worst norm excess {:.2e} (<= {NORM_SLACK:e}), {} flagged",
            audit.records, audit.worst_membership, audit.worst_norm, audit.flagged
        ),
    )
}

// ---------------------------------------------------------------- 2, 3

fn criterion_2() -> Outcome {
    let target = (-1f64).exp() - RECOVERY_SLACK;
    let (mut hybrid_ok, mut fw_ok, mut worst) = (0, 0, f64::INFINITY);
    for seed in 0..20u64 {
        let (obj, dec) = qp(2 + seed as usize % 2, 300 + seed);
        let opt = grid_opt(&obj, &dec, 0.05).unwrap().value;
        let (h, _) = run_alg2_grid(&obj, &dec, 0.05).unwrap();
        let fw = run_fw_downclosed(&obj, dec.down(), 0.05).unwrap();
        let (rh, rf) = (h.best.value / opt, fw.best.value / opt);
        hybrid_ok += usize::from(rh >= target);
        fw_ok += usize::from(rf >= target);
        worst = worst.min(rh).min(rf);
    }
    outcome(
        hybrid_ok == 20 && fw_ok == 20,
        format!("hybrid {hybrid_ok}/20, down-closed Frank-Wolfe {fw_ok}/20 at >= {target:.4}·OPT (worst ratio {worst:.4})"),
    )
}

fn criterion_3() -> Outcome {
    let mut ok = 0;
    let mut worst_margin = f64::INFINITY;
    for seed in 0..20u64 {
        let (obj, dec) = general_qp(2 + seed as usize % 2, 400 + seed, 0.5);
        let opt = grid_opt(&obj, &dec, 0.05).unwrap().value;
        let (h, _) = run_alg2_grid(&obj, &dec, 0.05).unwrap();
        let target = 0.25 * (1.0 - dec.m()) - RECOVERY_SLACK;
        let ratio = h.best.value / opt;
        ok += usize::from(ratio >= target);
        worst_margin = worst_margin.min(ratio - target);
    }
    outcome(
        ok == 20,
        format!("{ok}/20 at >= (¼(1-m) - {RECOVERY_SLACK})·OPT (smallest margin {worst_margin:.4})"),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let eps = 0.01;
    let (mut r3, mut rg, mut rd, mut floor) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0.0;
    for n in [8usize, 10, 12] {
        for seed in 0..20u64 {
            let (obj, dec) = qp(n, 500 + seed);
            let (a3, _) = run_alg3_grid(&obj, &dec, eps).unwrap();
            let (a2, _) = run_alg2_grid(&obj, &dec, eps).unwrap();
            let fg = run_fw_general(&obj, &dec, eps).unwrap();
            let fd = run_fw_downclosed(&obj, dec.down(), eps).unwrap();
            let candidates = vec![
                a3.best.point.clone(),
                a2.best.point.clone(),
                fg.best.point.clone(),
                fd.best.point.clone(),
            ];
            let opts = AscentOptions {
                seed,
                ..AscentOptions::default()
            };
            let opt = reference_opt(&obj, &dec, &candidates, opts).unwrap().value;
            r3 += a3.best.value / opt;
            rg += fg.best.value / opt;
            rd += fd.best.value / opt;
            floor += obj.value(&vec![0.0; n]).unwrap() / opt;
            count += 1.0;
        }
    }
    let (r3, rg, rd, floor) = (r3 / count, rg / count, rd / count, floor / count);
    let gap_ok = r3 >= rg + ORDERING_GAP;
    let band_ok = (r3 - rd).abs() <= ORDERING_BAND;
    outcome(
        gap_ok && band_ok,
        format!(
            "mean ratios: empirical hybrid {r3:.4}, general Frank-Wolfe {rg:.4}, down-closed Frank-Wolfe {rd:.4}; \
             gap to general {:.4} (need >= {ORDERING_GAP}: {}), distance to down-closed {:.4} (need <= {ORDERING_BAND}: {}); \
             mean F(0)/OPT {floor:.4} caps every gap at {:.4}",
            r3 - rg,
            if gap_ok { "ok" } else { "FAIL" },
            (r3 - rd).abs(),
            if band_ok { "ok" } else { "FAIL" },
            1.0 - floor,
        ),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut r = rng(7);
    let graph = erdos_renyi::<f64, _>(200, 0.05, false, &mut r).unwrap().revenue(1e-4).unwrap();
    let stream = sample_subgraph_stream(&graph, 50, 200, &mut r).unwrap();
    let dec = revenue_constraint::<f64>(200).unwrap();
    let opts = OnlineOptions::new(0.05);
    let meta = run_online_experiment(&stream, &dec, &opts, OnlineMode::Meta).unwrap();
    let base = run_online_baseline(&stream, &dec, &opts).unwrap();
    let (cm, cb) = (meta.cumulative_value(), base.cumulative_value());
    outcome(
        cm >= cb,
        format!(
            "cumulative normalized value at L = 200: meta {cm:.4}, baseline {cb:.4} (max residuals {:.1e} / {:.1e})",
            meta.max_residual(),
            base.max_residual()
        ),
    )
}

// ---------------------------------------------------------------- 6

#[derive(Clone, Copy, Debug)]
enum Adversary {
    RandomSigns,
    FlipFlop,
    Adaptive,
}

/// Regret of one FTRL run and its guarantee.
fn olo_run(body: &HPolytope<f64>, anchor: &[f64], diameter: f64, horizon: usize, adv: Adversary, seed: u64) -> (f64, f64) {
    let n = body.dim();
    let g = 1.0;
    let mut o = FtrlOptimizer::new(body, anchor.to_vec(), diameter, g, horizon).unwrap();
    let mut r = rng(seed);
    let mut total = vec![0.0; n];
    let mut gained = 0.0;
    for t in 0..horizon {
        let x = o.next().unwrap();
        let d: Vec<f64> = match adv {
            Adversary::RandomSigns => (0..n)
                .map(|_| if r.random::<bool>() { g } else { -g } / (n as f64).sqrt())
                .collect(),
            Adversary::FlipFlop => {
                let mut d = vec![0.0; n];
                d[0] = if t == 0 { 0.5 * g } else if t % 2 == 1 { -g } else { g };
                d
            }
            Adversary::Adaptive => {
                let dir: Vec<f64> = anchor.iter().zip(&x).map(|(a, b)| a - b).collect();
                let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if len > 1e-12 {
                    dir.iter().map(|v| g * v / len).collect()
                } else {
                    (0..n).map(|j| if j % 2 == 0 { g } else { -g } / (n as f64).sqrt()).collect()
                }
            }
        };
        gained += dot(&d, &x);
        for (s, v) in total.iter_mut().zip(&d) {
            *s += v;
        }
        o.feed(&d).unwrap();
    }
    let best = body.maximize_linear(&total).unwrap().objective;
    (best - gained, o.regret_bound())
}

fn criterion_6() -> Outcome {
    let boxed = HPolytope::<f64>::unit_box(10);
    let simplex = HPolytope::<f64>::sum_equal(10, 1.0).unwrap();
    let dec = revenue_constraint::<f64>(20).unwrap();
    let joint = dec.joint_polytope();
    let mut joint_anchor = dec.y0().to_vec();
    joint_anchor.resize(40, 0.0);
    let bodies: Vec<(&str, &HPolytope<f64>, Vec<f64>, f64)> = vec![
        ("box", &boxed, vec![0.5; 10], 10f64.sqrt()),
        ("simplex", &simplex, vec![0.1; 10], 2f64.sqrt()),
        ("revenue joint", &joint, joint_anchor, dec.joint_diameter_upper().unwrap()),
    ];
    let mut runs = 0;
    let mut ok = 0;
    let mut worst = 0.0f64;
    for (k, (_, body, anchor, diam)) in bodies.iter().enumerate() {
        for horizon in [100usize, 1000] {
            for adv in [Adversary::RandomSigns, Adversary::FlipFlop, Adversary::Adaptive] {
                let (regret, bound) = olo_run(body, anchor, *diam, horizon, adv, 600 + k as u64);
                runs += 1;
                ok += usize::from(regret <= bound);
                worst = worst.max(regret / bound);
            }
        }
    }
    outcome(
        ok == runs,
        format!("{ok}/{runs} runs within D'G'√(2L) over box, simplex and revenue joint body (largest regret/bound {worst:.3})"),
    )
}

// ---------------------------------------------------------------- 7

fn subsets(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..(1 << n)).map(move |mask| (0..n).map(|j| mask & (1 << j) != 0).collect())
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    // multilinear location value against the set-function expectation
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let n = 6 + seed as usize;
        let (obj, _) = location(n, 700 + seed);
        let mut r = rng(710 + seed);
        for _ in 0..3 {
            let x = random_point(n, &mut r);
            let mut expect = 0.0;
            for set in subsets(n) {
                let pr: f64 = set.iter().zip(&x).map(|(&s, &v)| if s { v } else { 1.0 - v }).product();
                expect += pr * obj.discrete_value(&set).unwrap();
            }
            let got = obj.value(&x).unwrap();
            worst = worst.max((got - expect).abs() / (1.0 + expect.abs()));
        }
    }
    pass &= worst <= ORACLE_TOL;
    notes.push(format!("location vs 2^n sum {worst:.1e}"));

    // revenue against sampled advocate sets
    let mut worst_sigma = 0.0f64;
    for seed in 0..3u64 {
        let (obj, _) = revenue(8, 720 + seed);
        let mut r = rng(730 + seed);
        let x = random_point(8, &mut r);
        let q = 1.0 - 0.3f64;
        let edges = obj.edges();
        let samples = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..samples {
            let adv: Vec<bool> = x.iter().map(|&v| r.random::<f64>() < 1.0 - q.powf(v)).collect();
            let rev: f64 = edges
                .iter()
                .map(|&(u, v, w)| if adv[u] != adv[v] { w } else { 0.0 })
                .sum();
            sum += rev;
            sq += rev * rev;
        }
        let mean = sum / samples as f64;
        let sd = ((sq / samples as f64 - mean * mean).max(0.0) / samples as f64).sqrt();
        let z = (obj.value(&x).unwrap() - mean).abs() / sd.max(1e-300);
        worst_sigma = worst_sigma.max(z);
    }
    pass &= worst_sigma <= 3.0;
    notes.push(format!("revenue vs Monte Carlo {worst_sigma:.2}σ"));

    // subset expansion and the ⊕ norm bound on 1000 configurations per family
    let families: Vec<Box<dyn Objective<f64>>> = vec![
        Box::new(qp(6, 740).0),
        Box::new(revenue(8, 741).0),
        Box::new(location(7, 742).0),
    ];
    let mut expansion_bad = 0;
    let mut norm_bad = 0;
    let mut fd_worst = 0.0f64;
    for (k, obj) in families.iter().enumerate() {
        let n = obj.dim();
        let mut r = rng(750 + k as u64);
        for c in 0..1000 {
            let count = 2 + c % 2;
            let xs: Vec<Vec<f64>> = (0..count).map(|_| random_point(n, &mut r)).collect();
            let ps: Vec<f64> = (0..count).map(|_| r.random::<f64>()).collect();
            let gap = subset_expansion_gap(obj.as_ref(), &xs, &ps).unwrap();
            expansion_bad += usize::from(gap < -ORACLE_TOL);
        }
        let rep = dr_probe(obj.as_ref(), 1000, ORACLE_TOL, &mut r).unwrap();
        norm_bad += rep.psum_norm_bound;
        for _ in 0..100 {
            let x = random_point(n, &mut r);
            fd_worst = fd_worst.max(fd_gradient_check(obj.as_ref(), &x, 1e-5).unwrap());
        }
    }
    pass &= expansion_bad == 0 && norm_bad == 0 && fd_worst <= FD_TOL;
    notes.push(format!("subset expansion violations {expansion_bad}/3000"));
    notes.push(format!("⊕ norm bound violations {norm_bad}/3000"));
    notes.push(format!("gradient rel. error {fd_worst:.1e}"));
    outcome(pass, notes.join(", "))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let eps = 1.0 / 30.0;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let n = 3 + seed as usize % 6;
        let obj = box_quadratic(n, 800 + seed);
        let dec = Decomposition::new(HPolytope::origin(n), HPolytope::unit_box(n)).unwrap();
        let h = run_alg2(&obj, &dec, eps, 0.0).unwrap();
        let fw = run_fw_downclosed(&obj, dec.down(), eps).unwrap();
        assert_eq!(h.records.len(), fw.records.len());
        for (a, b) in h.records.iter().zip(&fw.records) {
            for (u, v) in a.w.iter().zip(&b.w) {
                worst = worst.max((u - v).abs());
            }
        }
    }
    let traj_ok = worst <= TRAJECTORY_TOL;

    let mut gap = 0.0f64;
    let (g, gdec) = revenue(12, 810);
    let (q, qdec) = qp(6, 811);
    let cases: Vec<(&dyn Objective<f64>, &Decomposition<f64>, f64)> = vec![(&g, &gdec, 0.5), (&q, &qdec, 0.0)];
    for (obj, dec, t_s) in cases {
        let off = run_alg2(obj, dec, eps, t_s).unwrap();
        let offline = off.final_record().f_w / obj.value_upper();
        let stream = vec![obj; 500];
        let run = run_online_experiment(&stream, dec, &OnlineOptions::new(eps), OnlineMode::Fixed { t_s }).unwrap();
        let online = run.cumulative_value() / 500.0;
        gap = gap.max((online - offline).abs());
    }
    let online_ok = gap <= ONLINE_GAP;
    outcome(
        traj_ok && online_ok,
        format!(
            "hybrid at t_s = 0 vs down-closed Frank-Wolfe: max coordinate gap {worst:.1e} over 10 instances; \
             constant-stream online average vs offline: gap {gap:.4} after L = 500"
        ),
    )
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let e = theorem1_value(1.0, 1.0, 1.0, 0.0, 0.0, 1.0);
    let mut worst = (e - (-1f64).exp()).abs();
    let ln2 = 2f64.ln();
    for m in [0.0, 0.25, 0.5, 0.9] {
        let v = theorem1_value(1.0, 0.0, 0.0, m, ln2, ln2);
        worst = worst.max((v - 0.25 * (1.0 - m)).abs());
    }
    outcome(worst <= BOUND_TOL, format!("largest deviation {worst:.1e}"))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(fn() -> Outcome, Duration); 9] = [
        (criterion_1, Duration::from_secs(120)),
        (criterion_2, Duration::from_secs(60)),
        (criterion_3, Duration::from_secs(60)),
        (criterion_4, Duration::from_secs(600)),
        (criterion_5, Duration::from_secs(600)),
        (criterion_6, Duration::from_secs(120)),
        (criterion_7, Duration::from_secs(180)),
        (criterion_8, Duration::from_secs(600)),
        (criterion_9, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (k, (run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took <= *budget;
        failed += usize::from(!pass);
        println!(
            "criterion {} {}: {} [{:.1}s of {}s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
