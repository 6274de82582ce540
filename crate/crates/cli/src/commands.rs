//! The smaller subcommands: QP generation, graph ingestion and the
//! invariant suite.

use std::fmt::Write as _;
use std::io::BufRead;

use drsub_core::instances::{
    erdos_renyi, location_constraint, location_stream, parse_edge_list, revenue_constraint, sample_subgraph_stream,
    EdgeList, IndexBase, LocationParams,
};
use drsub_core::objectives::{dr_probe, fd_gradient_check, make_qp_instance, Objective, QpDistribution};
use drsub_core::offline::{run_alg2, run_alg3_grid, run_fw_general, InvariantKind, Trace};
use drsub_core::online::{run_online_experiment, OnlineMode, OnlineOptions};
use drsub_core::polytope::Decomposition;
use rand_chacha::rand_core::RngCore;
use serde_json::json;

use crate::run::{qp_seed, FEASIBILITY_TOL};
use crate::seeding::{rng, Lane};
use crate::Failure;

/// The QP that `run` solves for `(seed, n)`, as JSON.
pub fn gen_qp(n: usize, rows: Option<usize>, dist: QpDistribution, seed: u64) -> Result<String, Failure> {
    let rows = rows.unwrap_or(n);
    let g = qp_seed(seed, n);
    let q = make_qp_instance::<f64>(n, rows, dist, g).map_err(|e| Failure::Config(e.to_string()))?;
    let doc = json!({
        "n": n,
        "rows": rows,
        "dist": dist,
        "seed": seed,
        "generator_seed": g,
        "hess": q.hess,
        "lin": q.lin,
        "offset": q.offset,
        "packing": q.packing,
        "upper": q.upper,
        "decomposition": q.decomposition,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json value serializes");
    s.push('\n');
    Ok(s)
}

/// Parses an edge list and describes it.
pub fn ingest_graph<R: BufRead>(reader: R, base: IndexBase) -> Result<(EdgeList<f64>, String), Failure> {
    let g = parse_edge_list::<f64, _>(reader, base).map_err(|e| Failure::Config(e.to_string()))?;
    let text = format!(
        "nodes {}\nedges {}\nmerged {}\nself_loops {}\ntotal_weight {}\n",
        g.nodes,
        g.edges.len(),
        g.merged,
        g.self_loops,
        g.total_weight()
    );
    Ok((g, text))
}

#[derive(Default)]
struct Tally {
    lines: String,
    violations: usize,
}

impl Tally {
    fn record(&mut self, family: &str, check: &str, checked: usize, bad: usize) {
        let _ = writeln!(
            self.lines,
            "{family:<9} {check:<22} {checked:>6} checked {bad:>3} violations"
        );
        self.violations += bad;
    }
}

fn flags(t: &Trace<f64>, allow_potential: bool) -> usize {
    t.invariant_violations
        .iter()
        .filter(|v| !(allow_potential && v.kind == InvariantKind::Potential))
        .count()
}

fn check_family(
    tally: &mut Tally,
    family: &str,
    obj: &dyn Objective<f64>,
    dec: &Decomposition<f64>,
    seed: u64,
) -> Result<(), Failure> {
    let solver = |e: drsub_core::Error| Failure::Solver(format!("{family}: {e}"));
    let mut r = rng(seed, Lane::Validate, 0);
    let probe = dr_probe(obj, 200, 1e-9, &mut r).map_err(solver)?;
    tally.record(family, "dr-submodularity", probe.pairs, probe.violations());

    let x: Vec<f64> = (0..obj.dim())
        .map(|_| 0.05 + 0.9 * (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
        .collect();
    let fd = fd_gradient_check(obj, &x, 1e-5).map_err(solver)?;
    tally.record(family, "gradient", 1, usize::from(fd > 1e-5));

    let eps = 0.05;
    let mut traces = vec![
        (run_alg2(obj, dec, eps, 0.5).map_err(solver)?, false),
        (run_alg3_grid(obj, dec, eps).map_err(solver)?.0, true),
        (run_fw_general(obj, dec, eps).map_err(solver)?, false),
    ];
    let iterates: usize = traces.iter().map(|(t, _)| t.records.len()).sum();
    let flagged: usize = traces.iter().map(|(t, p)| flags(t, *p)).sum();
    tally.record(family, "iterate invariants", iterates, flagged);
    let mut outside = 0;
    for (t, _) in traces.drain(..) {
        if dec.membership_residual(&t.best.point).map_err(solver)? > FEASIBILITY_TOL {
            outside += 1;
        }
    }
    tally.record(family, "output membership", 3, outside);
    Ok(())
}

fn check_stream<F: Objective<f64>>(
    tally: &mut Tally,
    family: &str,
    stream: &[F],
    dec: &Decomposition<f64>,
) -> Result<(), Failure> {
    let run = run_online_experiment(stream, dec, &OnlineOptions::new(0.1), OnlineMode::Fixed { t_s: 0.5 })
        .map_err(|e| Failure::Solver(format!("{family}: {e}")))?;
    tally.record(family, "online stages", run.steps.len(), run.stage_violations);
    let bad = run.steps.iter().filter(|s| s.feasibility_residual > FEASIBILITY_TOL).count();
    tally.record(family, "online membership", run.steps.len(), bad);
    Ok(())
}

/// Runs the invariant suite on `instances` seeded small instances per
/// family. Returns the report and the number of violations.
pub fn validate(seed: u64, instances: usize) -> Result<(String, usize), Failure> {
    let mut tally = Tally::default();
    let solver = |e: drsub_core::Error| Failure::Solver(e.to_string());
    for k in 0..instances as u64 {
        let s = seed.wrapping_add(k);
        let q = make_qp_instance::<f64>(6, 6, QpDistribution::Uniform, qp_seed(s, 6)).map_err(solver)?;
        check_family(&mut tally, "qp", &q.objective, &q.decomposition, s)?;

        let g = erdos_renyi::<f64, _>(8, 0.4, true, &mut rng(s, Lane::Graph, 0)).map_err(solver)?;
        let rev = g.revenue(0.3).map_err(solver)?;
        let dec = revenue_constraint(8).map_err(solver)?;
        check_family(&mut tally, "revenue", &rev, &dec, s)?;
        let stream = sample_subgraph_stream(&rev, 6, 5, &mut rng(s, Lane::Stream, 0)).map_err(solver)?;
        check_stream(&mut tally, "revenue", &stream, &dec)?;

        let params = LocationParams {
            locations: 6,
            ..LocationParams::default()
        };
        let users = location_stream::<f64, _>(&params, 5, &mut rng(s, Lane::Stream, 1)).map_err(solver)?;
        let dec = location_constraint(6).map_err(solver)?;
        check_family(&mut tally, "location", &users[0], &dec, s)?;
        check_stream(&mut tally, "location", &users, &dec)?;
    }
    let _ = writeln!(tally.lines, "total violations {}", tally.violations);
    Ok((tally.lines, tally.violations))
}
