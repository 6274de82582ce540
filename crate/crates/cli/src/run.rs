//! The `run` command: build every instance, solve every (instance, solver)
//! cell on a worker pool, then write results from a single thread.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use drsub_core::instances::{
    erdos_renyi, location_constraint, location_stream, parse_edge_list, revenue_constraint, sample_subgraph_stream,
    EdgeList, IndexBase, LocationParams,
};
use drsub_core::objectives::{make_qp_instance, Objective};
use drsub_core::offline::{
    grid_opt, reference_opt, run_offline, snap_steps, snap_switch, AscentOptions, InvariantKind, OfflineConfig, Trace,
};
use drsub_core::online::{run_online_baseline, run_online_experiment, OnlineMode, OnlineOptions, OnlineRun};
use drsub_core::polytope::{Decomposition, HPolytope};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{Experiment, ExperimentConfig, Solver};
use crate::seeding::{derive, rng, Lane};
use crate::stats::{mean_curve, Spread};
use crate::Failure;

/// Residual above which an emitted point counts as infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Grid step of the brute-force comparator used when `alg1` has no value.
const P1_GRID_STEP: f64 = 0.05;

type Obj = Box<dyn Objective<f64>>;

enum Body {
    Offline(Obj),
    Stream(Vec<Obj>),
}

struct Instance {
    seed: u64,
    n: usize,
    dec: Decomposition<f64>,
    body: Body,
}

enum Outcome {
    Offline(Trace<f64>),
    Online(OnlineRun<f64>),
}

struct Cell {
    instance: usize,
    solver: Solver,
    outcome: Result<Outcome, String>,
}

impl Cell {
    /// Feasibility residual of what the cell emits.
    fn residual(&self, inst: &Instance) -> Option<f64> {
        match self.outcome.as_ref().ok()? {
            Outcome::Offline(t) => inst.dec.membership_residual(&t.best.point).ok(),
            Outcome::Online(r) => Some(r.max_residual()),
        }
    }
}

/// Counts reported back to the caller once everything is on disk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config_hash: String,
    pub cells: usize,
    pub failed: usize,
    pub feasibility_violations: usize,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical().as_bytes()))
}

/// Number of (instance, solver) cells the config describes.
pub fn planned_cells(cfg: &ExperimentConfig) -> usize {
    let per_seed = match cfg.experiment {
        Experiment::QpOffline => cfg.instance.n.len(),
        _ => 1,
    };
    per_seed * cfg.seeds.len() * cfg.solvers.len()
}

fn load_graph(path: &Path) -> Result<EdgeList<f64>, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_edge_list(std::io::BufReader::new(file), IndexBase::Auto)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn build(cfg: &ExperimentConfig, graph: Option<&EdgeList<f64>>, seed: u64, n: usize) -> Result<Instance, String> {
    let p = &cfg.instance;
    let synthetic = |seed| -> Result<EdgeList<f64>, String> {
        match graph {
            Some(g) => Ok(g.clone()),
            None => erdos_renyi(p.nodes, p.p_edge, p.weighted, &mut rng(seed, Lane::Graph, 0)).map_err(|e| e.to_string()),
        }
    };
    let inst = match cfg.experiment {
        Experiment::QpOffline => {
            let q = make_qp_instance::<f64>(n, p.m_rows.unwrap_or(n), p.dist, qp_seed(seed, n)).map_err(|e| e.to_string())?;
            Instance {
                seed,
                n,
                dec: q.decomposition,
                body: Body::Offline(Box::new(q.objective)),
            }
        }
        Experiment::RevenueOffline => {
            let g = synthetic(seed)?;
            Instance {
                seed,
                n: g.nodes,
                dec: revenue_constraint(g.nodes).map_err(|e| e.to_string())?,
                body: Body::Offline(Box::new(g.revenue(p.p).map_err(|e| e.to_string())?)),
            }
        }
        Experiment::RevenueOnline => {
            let g = synthetic(seed)?;
            let whole = g.revenue(p.p).map_err(|e| e.to_string())?;
            let stream = sample_subgraph_stream(&whole, p.subgraph, p.steps, &mut rng(seed, Lane::Stream, 0))
                .map_err(|e| e.to_string())?;
            Instance {
                seed,
                n: g.nodes,
                dec: revenue_constraint(g.nodes).map_err(|e| e.to_string())?,
                body: Body::Stream(stream.into_iter().map(|f| Box::new(f) as Obj).collect()),
            }
        }
        Experiment::LocationOnline => {
            let params = LocationParams {
                locations: p.locations,
                features: p.features,
                bandwidth: p.bandwidth,
                width: p.width,
                height: p.height,
            };
            let stream =
                location_stream::<f64, _>(&params, p.steps, &mut rng(seed, Lane::Stream, 0)).map_err(|e| e.to_string())?;
            Instance {
                seed,
                n: p.locations,
                dec: location_constraint(p.locations).map_err(|e| e.to_string())?,
                body: Body::Stream(stream.into_iter().map(|f| Box::new(f) as Obj).collect()),
            }
        }
    };
    Ok(inst)
}

/// Generator seed of the QP at dimension `n` under run seed `seed`; `gen-qp`
/// uses the same derivation so its output matches the instance `run` solves.
pub fn qp_seed(seed: u64, n: usize) -> u64 {
    derive(seed, Lane::Qp, n as u64)
}

fn solve(cfg: &ExperimentConfig, inst: &Instance, solver: Solver) -> Result<Outcome, String> {
    let err = |e: drsub_core::Error| e.to_string();
    match (&inst.body, solver.variant()) {
        (Body::Offline(obj), Some(variant)) => {
            let known = match (variant, cfg.known_p1_value) {
                (drsub_core::offline::Variant::Alg1, None) => Some(p1_oracle(obj.as_ref(), &inst.dec)?),
                (_, v) => v,
            };
            let oc = OfflineConfig {
                variant,
                epsilon: cfg.epsilon,
                t_s: cfg.t_s,
                known_p1_value: known,
            };
            run_offline(obj.as_ref(), &inst.dec, &oc).map(Outcome::Offline).map_err(err)
        }
        (Body::Stream(stream), None) => {
            let opts = OnlineOptions {
                epsilon: cfg.epsilon,
                grad_bound: cfg.instance.grad_bound,
                comparator: None,
            };
            let run = match solver {
                Solver::Meta => run_online_experiment(stream, &inst.dec, &opts, OnlineMode::Meta),
                Solver::Fixed => {
                    let t_s = cfg.t_s.ok_or("fixed needs t_s")?;
                    run_online_experiment(stream, &inst.dec, &opts, OnlineMode::Fixed { t_s })
                }
                _ => run_online_baseline(stream, &inst.dec, &opts),
            };
            run.map(Outcome::Online).map_err(err)
        }
        _ => Err(format!("solver {} does not apply", solver.name())),
    }
}

/// Best value of `F` over the down-closed part alone, on a grid.
fn p1_oracle(obj: &dyn Objective<f64>, dec: &Decomposition<f64>) -> Result<f64, String> {
    let down_only = Decomposition::new(HPolytope::origin(dec.dim()), dec.down().clone()).map_err(|e| e.to_string())?;
    grid_opt(obj, &down_only, P1_GRID_STEP)
        .map(|r| r.value)
        .map_err(|e| format!("alg1 comparator oracle: {e}"))
}

fn reference(cfg: &ExperimentConfig, inst: &Instance, cells: &[&Cell]) -> Result<f64, String> {
    let Body::Offline(obj) = &inst.body else {
        return Err("not an offline instance".into());
    };
    let candidates: Vec<Vec<f64>> = cells
        .iter()
        .filter_map(|c| match &c.outcome {
            Ok(Outcome::Offline(t)) if inst.dec.membership_residual(&t.best.point).is_ok_and(|r| r <= FEASIBILITY_TOL) => {
                Some(t.best.point.clone())
            }
            _ => None,
        })
        .collect();
    let opts = AscentOptions {
        starts: cfg.instance.ascent_starts,
        seed: derive(inst.seed, Lane::Ascent, inst.n as u64),
        ..AscentOptions::default()
    };
    reference_opt(obj.as_ref(), &inst.dec, &candidates, opts)
        .map(|r| r.value)
        .map_err(|e| e.to_string())
}

/// Effective `(ε, t_s)` each solver runs with.
fn effective(cfg: &ExperimentConfig) -> Vec<serde_json::Value> {
    cfg.solvers
        .iter()
        .map(|&s| {
            let (eps, t_s) = match s.variant() {
                Some(variant) => OfflineConfig {
                    variant,
                    epsilon: cfg.epsilon,
                    t_s: cfg.t_s,
                    known_p1_value: None,
                }
                .effective()
                .unwrap_or((f64::NAN, None)),
                None => {
                    let k = snap_steps(cfg.epsilon).unwrap_or(1);
                    let t = match s {
                        Solver::Fixed => cfg.t_s.and_then(|t| snap_switch(t, k).ok()).map(|i| i as f64 / k as f64),
                        _ => None,
                    };
                    (1.0 / k as f64, t)
                }
            };
            json!({"solver": s.name(), "epsilon": eps, "t_s": t_s})
        })
        .collect()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs the experiment and writes its artifacts under `cfg.out_dir()`.
pub fn execute(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunReport, Failure> {
    cfg.validate()?;
    let graph = match (&cfg.instance.graph, cfg.experiment) {
        (Some(path), Experiment::RevenueOffline | Experiment::RevenueOnline) => {
            let g = load_graph(path)?;
            if cfg.experiment == Experiment::RevenueOnline && cfg.instance.subgraph > g.nodes {
                return Err(Failure::Config(format!(
                    "subgraph {} exceeds the {} nodes of {}",
                    cfg.instance.subgraph,
                    g.nodes,
                    path.display()
                )));
            }
            Some(g)
        }
        _ => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;

    let keys: Vec<(u64, usize)> = match cfg.experiment {
        Experiment::QpOffline => cfg
            .instance
            .n
            .iter()
            .flat_map(|&n| cfg.seeds.iter().map(move |&s| (s, n)))
            .collect(),
        Experiment::LocationOnline => cfg.seeds.iter().map(|&s| (s, cfg.instance.locations)).collect(),
        _ => {
            let n = graph.as_ref().map_or(cfg.instance.nodes, |g| g.nodes);
            cfg.seeds.iter().map(|&s| (s, n)).collect()
        }
    };

    let (instances, cells, refs) = pool.install(|| {
        let instances: Vec<Result<Instance, String>> =
            keys.par_iter().map(|&(s, n)| build(cfg, graph.as_ref(), s, n)).collect();
        let jobs: Vec<(usize, Solver)> = (0..instances.len())
            .flat_map(|i| cfg.solvers.iter().map(move |&s| (i, s)))
            .collect();
        let cells: Vec<Cell> = jobs
            .par_iter()
            .map(|&(i, solver)| {
                let outcome = match &instances[i] {
                    Ok(inst) => solve(cfg, inst, solver),
                    Err(e) => Err(format!("instance: {e}")),
                };
                if let Err(e) = &outcome {
                    log::warn!("seed {} {}: {e}", keys[i].0, solver.name());
                } else {
                    log::info!("seed {} n {} {} done", keys[i].0, keys[i].1, solver.name());
                }
                Cell {
                    instance: i,
                    solver,
                    outcome,
                }
            })
            .collect();
        let refs: Vec<Option<Result<f64, String>>> = if cfg.experiment.is_online() {
            vec![None; instances.len()]
        } else {
            (0..instances.len())
                .into_par_iter()
                .map(|i| {
                    let inst = instances[i].as_ref().ok()?;
                    let mine: Vec<&Cell> = cells.iter().filter(|c| c.instance == i).collect();
                    Some(reference(cfg, inst, &mine))
                })
                .collect()
        };
        (instances, cells, refs)
    });

    write_all(cfg, &keys, &instances, &cells, &refs)
}

fn write_all(
    cfg: &ExperimentConfig,
    keys: &[(u64, usize)],
    instances: &[Result<Instance, String>],
    cells: &[Cell],
    refs: &[Option<Result<f64, String>>],
) -> Result<RunReport, Failure> {
    let out = cfg.out_dir();
    let detail = out.join(if cfg.experiment.is_online() { "streams" } else { "traces" });
    fs::create_dir_all(&detail)?;

    let mut csv = String::new();
    let mut failures = Vec::new();
    let mut violations = 0usize;
    let mut flags = 0usize;
    // (group key, value) pairs for the summary
    let mut primary: Vec<((usize, Solver), f64)> = Vec::new();
    let mut values: Vec<((usize, Solver), f64)> = Vec::new();
    let mut curves: Vec<((usize, Solver), Vec<f64>)> = Vec::new();

    if cfg.experiment.is_online() {
        csv.push_str("experiment,seed,solver,status,cumulative_value,average_value,max_residual,stage_violations,error\n");
    } else {
        csv.push_str(
            "experiment,n,seed,solver,status,best_value,best_index,iterations,epsilon,t_s,reference_opt,ratio,feasibility_residual,invariant_flags,error\n",
        );
    }

    for cell in cells {
        let (seed, n) = keys[cell.instance];
        let inst = instances[cell.instance].as_ref().ok();
        let residual = inst.and_then(|i| cell.residual(i));
        if residual.is_some_and(|r| r > FEASIBILITY_TOL) {
            violations += 1;
        }
        let group = (n, cell.solver);
        let name = cell.solver.name();
        match (&cell.outcome, cfg.experiment.is_online()) {
            (Ok(Outcome::Online(run)), _) => {
                let cum = run.cumulative_value();
                let avg = cum / run.steps.len().max(1) as f64;
                let _ = writeln!(
                    csv,
                    "{},{seed},{name},ok,{cum},{avg},{},{},",
                    cfg.experiment.name(),
                    run.max_residual(),
                    run.stage_violations
                );
                flags += run.stage_violations;
                primary.push((group, cum));
                curves.push((group, run.steps.iter().map(|s| s.cum_value).collect()));
                fs::write(detail.join(format!("seed{seed}_{name}.csv")), run.to_csv())?;
            }
            (Ok(Outcome::Offline(t)), _) => {
                let opt = refs[cell.instance].as_ref().and_then(|r| r.as_ref().ok()).copied();
                let ratio = opt.filter(|&o| o > 0.0).map(|o| t.best.value / o);
                let flagged = t
                    .invariant_violations
                    .iter()
                    .filter(|v| v.kind != InvariantKind::Potential)
                    .count();
                flags += flagged;
                let _ = writeln!(
                    csv,
                    "{},{n},{seed},{name},ok,{},{},{},{},{},{},{},{},{flagged},",
                    cfg.experiment.name(),
                    t.best.value,
                    t.best.index,
                    t.iterations(),
                    t.epsilon,
                    t.t_s,
                    opt_num(opt),
                    opt_num(ratio),
                    opt_num(residual),
                );
                if let Some(r) = ratio {
                    primary.push((group, r));
                }
                values.push((group, t.best.value));
                fs::write(detail.join(format!("n{n}_seed{seed}_{name}.csv")), t.to_csv(seed))?;
            }
            (Err(e), true) => {
                let _ = writeln!(csv, "{},{seed},{name},error,,,,,{}", cfg.experiment.name(), quote(e));
                failures.push(json!({"seed": seed, "solver": name, "error": e}));
            }
            (Err(e), false) => {
                let _ = writeln!(csv, "{},{n},{seed},{name},error,,,,,,,,,,{}", cfg.experiment.name(), quote(e));
                failures.push(json!({"n": n, "seed": seed, "solver": name, "error": e}));
            }
        }
    }
    fs::write(out.join("results.csv"), &csv)?;

    let mut groups = Vec::new();
    let mut seen: Vec<(usize, Solver)> = Vec::new();
    for (_, n) in keys {
        for &s in &cfg.solvers {
            if !seen.contains(&(*n, s)) {
                seen.push((*n, s));
            }
        }
    }
    for key in seen {
        let pick = |xs: &[((usize, Solver), f64)]| -> Vec<f64> {
            xs.iter().filter(|(k, _)| *k == key).map(|(_, v)| *v).collect()
        };
        let failed = failures
            .iter()
            .filter(|f| f["solver"] == key.1.name() && f.get("n").is_none_or(|n| *n == key.0))
            .count();
        if cfg.experiment.is_online() {
            let mine: Vec<Vec<f64>> = curves.iter().filter(|(k, _)| *k == key).map(|(_, c)| c.clone()).collect();
            groups.push(json!({
                "solver": key.1.name(),
                "cumulative_value": Spread::of(&pick(&primary)),
                "mean_cumulative_curve": mean_curve(&mine),
                "failed": failed,
            }));
        } else {
            groups.push(json!({
                "n": key.0,
                "solver": key.1.name(),
                "ratio": Spread::of(&pick(&primary)),
                "best_value": Spread::of(&pick(&values)),
                "failed": failed,
            }));
        }
    }
    let summary = json!({"experiment": cfg.experiment.name(), "groups": groups});
    fs::write(out.join("summary.json"), pretty(&summary))?;

    let reference_failures: Vec<serde_json::Value> = refs
        .iter()
        .zip(keys)
        .filter_map(|(r, &(seed, n))| match r {
            Some(Err(e)) => Some(json!({"n": n, "seed": seed, "error": e})),
            _ => None,
        })
        .collect();
    let report = RunReport {
        config_hash: config_hash(cfg),
        cells: cells.len(),
        failed: failures.len(),
        feasibility_violations: violations,
    };
    let manifest = json!({
        "tool": concat!("drsub ", env!("CARGO_PKG_VERSION")),
        "config_hash": report.config_hash,
        "config": cfg.portable(),
        "seeds": cfg.seeds,
        "effective": effective(cfg),
        "cells": {"total": report.cells, "ok": report.cells - report.failed, "failed": report.failed},
        "failures": failures,
        "reference_failures": reference_failures,
        "feasibility_tol": FEASIBILITY_TOL,
        "feasibility_violations": violations,
        "invariant_flags": flags,
    });
    fs::write(out.join("manifest.json"), pretty(&manifest))?;
    Ok(report)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}
