//! Problem instances: edge-list ingestion, synthetic graphs and location
//! data, subgraph streams, and the two constraint families used with them.

use std::io::BufRead;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::objectives::{LocationObjective, RevenueObjective};
use crate::polytope::{Decomposition, HPolytope};
use crate::scalar::Scalar;

/// How node identifiers in an edge list are numbered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IndexBase {
    Zero,
    One,
    /// One-based when no line mentions node `0`.
    #[default]
    Auto,
}

/// A weighted undirected graph on nodes `0..nodes`. Every unordered pair
/// appears at most once, with `u < v`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeList<S> {
    pub nodes: usize,
    pub edges: Vec<(usize, usize, S)>,
    /// Lines that repeated an earlier pair (their weights were added).
    pub merged: usize,
    /// Self-loops, which carry no weight in the objective and are dropped.
    pub self_loops: usize,
}

impl<S: Scalar> EdgeList<S> {
    pub fn total_weight(&self) -> S {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn revenue(&self, p: S) -> Result<RevenueObjective<S>> {
        RevenueObjective::from_edges(self.nodes, &self.edges, p)
    }

    fn from_pairs(nodes: usize, raw: Vec<(usize, usize, S)>) -> Self {
        let mut self_loops = 0;
        let mut pairs: Vec<(usize, usize, S)> = Vec::with_capacity(raw.len());
        for (u, v, w) in raw {
            if u == v {
                self_loops += 1;
                continue;
            }
            pairs.push((u.min(v), u.max(v), w));
        }
        pairs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut edges: Vec<(usize, usize, S)> = Vec::with_capacity(pairs.len());
        let mut merged = 0;
        for (u, v, w) in pairs {
            match edges.last_mut() {
                Some(last) if last.0 == u && last.1 == v => {
                    last.2 += w;
                    merged += 1;
                }
                _ => edges.push((u, v, w)),
            }
        }
        EdgeList {
            nodes,
            edges,
            merged,
            self_loops,
        }
    }
}

/// Reads `u v [w]` lines (whitespace or comma separated, weight 1 when
/// missing). Blank lines and lines starting with `#` or `%` are skipped.
/// The node count is one more than the largest identifier, so isolated
/// nodes below it are kept.
pub fn parse_edge_list<S: Scalar, R: BufRead>(reader: R, base: IndexBase) -> Result<EdgeList<S>> {
    let mut raw: Vec<(usize, usize, S)> = Vec::new();
    let mut saw_zero = false;
    let mut max_id = None::<usize>;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `u v [w]`, found {} fields", fields.len()),
            });
        }
        let id = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("node id `{s}` is not a non-negative integer"),
            })
        };
        let u = id(fields[0])?;
        let v = id(fields[1])?;
        let w = match fields.get(2) {
            Some(s) => {
                let w: f64 = s.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("weight `{s}` is not a number"),
                })?;
                if !w.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("weight `{s}` is not finite"),
                    });
                }
                if w < 0.0 {
                    return Err(Error::Validation(format!("line {lineno}: negative weight {w}")));
                }
                S::of(w)
            }
            None => S::one(),
        };
        saw_zero |= u == 0 || v == 0;
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        raw.push((u, v, w));
    }
    let one_based = match base {
        IndexBase::Zero => false,
        IndexBase::One => {
            if saw_zero {
                return Err(Error::Validation("node 0 in a one-based edge list".into()));
            }
            true
        }
        IndexBase::Auto => !saw_zero && !raw.is_empty(),
    };
    if one_based {
        for e in raw.iter_mut() {
            e.0 -= 1;
            e.1 -= 1;
        }
    }
    let nodes = match max_id {
        Some(m) if one_based => m,
        Some(m) => m + 1,
        None => 0,
    };
    Ok(EdgeList::from_pairs(nodes, raw))
}

/// `G(n, p_edge)` with unit weights, or weights uniform in `[0.5, 1.5)` when
/// `weighted` is set.
pub fn erdos_renyi<S: Scalar, R: Rng + ?Sized>(
    nodes: usize,
    p_edge: f64,
    weighted: bool,
    rng: &mut R,
) -> Result<EdgeList<S>> {
    if !(0.0..=1.0).contains(&p_edge) {
        return Err(Error::Argument(format!("edge probability {p_edge} outside [0,1]")));
    }
    let mut raw = Vec::new();
    for u in 0..nodes {
        for v in u + 1..nodes {
            if rng.random::<f64>() < p_edge {
                let w = if weighted { rng.random_range(0.5..1.5) } else { 1.0 };
                raw.push((u, v, S::of(w)));
            }
        }
    }
    Ok(EdgeList::from_pairs(nodes, raw))
}

/// One objective per step: the subgraph induced by a fresh uniform subset of
/// `size` nodes, kept in the dimension of the full graph.
pub fn sample_subgraph_stream<S: Scalar, R: Rng + ?Sized>(
    graph: &RevenueObjective<S>,
    size: usize,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<RevenueObjective<S>>> {
    use crate::objectives::Objective;
    let n = graph.dim();
    if size > n {
        return Err(Error::Argument(format!("subset size {size} exceeds {n} nodes")));
    }
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut keep = vec![false; n];
        for i in sample(rng, n, size) {
            keep[i] = true;
        }
        out.push(graph.induced(&keep)?);
    }
    Ok(out)
}

/// `N = {Σ x = 0.1}`, `D = {Σ x <= 0.9}`: together the band `0.1 <= Σ x <= 1`.
pub fn revenue_constraint<S: Scalar>(n: usize) -> Result<Decomposition<S>> {
    band_constraint(n, S::of(0.1), S::of(0.9))
}

/// `N = {‖x‖₁ = 1}`, `D = {‖x‖₁ <= 1}`: together `1 <= ‖x‖₁ <= 2`.
pub fn location_constraint<S: Scalar>(n: usize) -> Result<Decomposition<S>> {
    band_constraint(n, S::one(), S::one())
}

fn band_constraint<S: Scalar>(n: usize, floor: S, extra: S) -> Result<Decomposition<S>> {
    if n == 0 {
        return Err(Error::Argument("constraint needs n >= 1".into()));
    }
    Decomposition::new(HPolytope::sum_equal(n, floor)?, HPolytope::sum_at_most(n, extra)?)
}

/// Parameters of the synthetic location-summary data.
#[derive(Clone, Debug, PartialEq)]
pub struct LocationParams {
    pub locations: usize,
    /// Dimension of the latent description vectors behind the similarities.
    pub features: usize,
    /// Width of the Gaussian similarity kernel.
    pub bandwidth: f64,
    /// Side lengths of the rectangle holding locations and users.
    pub width: f64,
    pub height: f64,
}

impl Default for LocationParams {
    fn default() -> Self {
        LocationParams {
            locations: 20,
            features: 6,
            bandwidth: 2.0,
            width: 1.0,
            height: 0.6,
        }
    }
}

/// Similarities `M_ij = exp(-‖f_i - f_j‖² / (2σ²))` between standard-normal
/// description vectors `f_i` (so `M_ii = 1`), and one objective per user
/// placed uniformly in the rectangle.
///
/// A user's cost for location `j` is its distance to the user divided by
/// `n` times the rectangle diagonal. Costs therefore stay below `1/n`, which
/// keeps every objective non-negative: each chosen location contributes at
/// least `M_jj / n = 1/n` to the summary term.
pub fn location_stream<S: Scalar, R: Rng + ?Sized>(
    params: &LocationParams,
    users: usize,
    rng: &mut R,
) -> Result<Vec<LocationObjective<S>>> {
    let n = params.locations;
    if n == 0 || params.features == 0 {
        return Err(Error::Argument("need at least one location and one feature".into()));
    }
    if !(params.bandwidth > 0.0 && params.width > 0.0 && params.height > 0.0) {
        return Err(Error::Argument("bandwidth and rectangle sides must be positive".into()));
    }
    let feats: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..params.features).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    let two_s2 = 2.0 * params.bandwidth * params.bandwidth;
    let mut scores = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = feats[i].iter().zip(&feats[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            scores[i * n + j] = S::of((-d2 / two_s2).exp());
        }
    }
    let spots: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..params.width), rng.random_range(0.0..params.height)))
        .collect();
    let diag = params.width.hypot(params.height);
    let mut out = Vec::with_capacity(users);
    for _ in 0..users {
        let ux = rng.random_range(0.0..params.width);
        let uy = rng.random_range(0.0..params.height);
        let costs: Vec<S> = spots
            .iter()
            .map(|&(x, y)| S::of((x - ux).hypot(y - uy) / (diag * n as f64)))
            .collect();
        out.push(LocationObjective::new(n, n, scores.clone(), costs)?);
    }
    Ok(out)
}
