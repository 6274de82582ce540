use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::scalar::Scalar;

/// Expected revenue of an influence campaign on a weighted undirected graph:
/// `F(x) = Σ_{i≠j} w_ij (1 - q^{x_i}) q^{x_j}` with `q = 1 - p`.
///
/// Node `i` becomes an advocate independently with probability
/// `1 - q^{x_i}`; the revenue is the weight of the edges leaving the
/// advocate set. The weight matrix is kept in compressed rows holding both
/// directions of every edge.
#[derive(Clone, Debug, PartialEq)]
pub struct RevenueObjective<S> {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<S>,
    p: S,
    ln_q: S,
    total_weight: S,
}

impl<S: Scalar> RevenueObjective<S> {
    /// Builds the objective from undirected edges `(u, v, w)`.
    ///
    /// Duplicate edges have their weights summed, self-loops are dropped and
    /// zero-weight edges are skipped. Negative weights are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, S)], p: S) -> Result<Self> {
        if !(p > S::zero() && p < S::one()) {
            return Err(Error::Argument(format!("activation probability {p} outside (0,1)")));
        }
        let mut directed: Vec<(usize, usize, S)> = Vec::with_capacity(2 * edges.len());
        for (k, &(u, v, w)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::Validation(format!(
                    "edge {k} ({u},{v}) references a node outside 0..{n}"
                )));
            }
            if !w.is_finite() || w < S::zero() {
                return Err(Error::Validation(format!("edge {k} has invalid weight {w}")));
            }
            if u == v || w == S::zero() {
                continue;
            }
            directed.push((u, v, w));
            directed.push((v, u, w));
        }
        directed.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_start = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(directed.len());
        let mut weights: Vec<S> = Vec::with_capacity(directed.len());
        let mut last: Option<(usize, usize)> = None;
        for (u, v, w) in directed {
            if last == Some((u, v)) {
                *weights.last_mut().expect("merged edge has a predecessor") += w;
                continue;
            }
            last = Some((u, v));
            row_start[u + 1] += 1;
            cols.push(v);
            weights.push(w);
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        let total_weight = weights.iter().copied().sum();
        Ok(RevenueObjective {
            n,
            row_start,
            cols,
            weights,
            p,
            ln_q: (S::one() - p).ln(),
            total_weight,
        })
    }

    pub fn p(&self) -> S {
        self.p
    }

    /// Number of undirected edges with positive weight.
    pub fn edge_count(&self) -> usize {
        self.cols.len() / 2
    }

    /// `Σ_{i≠j} w_ij`, i.e. twice the total undirected weight.
    pub fn total_weight(&self) -> S {
        self.total_weight
    }

    /// Neighbours of `i` with their weights.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    /// Undirected edge list `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, S)> {
        (0..self.n)
            .flat_map(|u| self.neighbors(u).filter(move |&(v, _)| u < v).map(move |(v, w)| (u, v, w)))
            .collect()
    }

    /// The objective of the subgraph induced by the nodes with `keep[i]`,
    /// still in dimension `n` (edges touching a dropped node vanish).
    pub fn induced(&self, keep: &[bool]) -> Result<Self> {
        check_dim(self.n, keep.len())?;
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .filter(|&(u, v, _)| keep[u] && keep[v])
            .collect();
        RevenueObjective::from_edges(self.n, &edges, self.p)
    }

    fn powers(&self, x: &[S]) -> Vec<S> {
        x.iter().map(|&v| (self.ln_q * v).exp()).collect()
    }
}

impl<S: Scalar> Objective<S> for RevenueObjective<S> {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[S]) -> Result<S> {
        check_dim(self.n, x.len())?;
        let qx = self.powers(x);
        let mut total = S::zero();
        for i in 0..self.n {
            let out: S = self.neighbors(i).map(|(j, w)| w * qx[j]).sum();
            total += (S::one() - qx[i]) * out;
        }
        Ok(total)
    }

    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        check_dim(self.n, x.len())?;
        let qx = self.powers(x);
        let mut g = vec![S::zero(); self.n];
        for k in 0..self.n {
            let (mut stay, mut reach) = (S::zero(), S::zero());
            for (j, w) in self.neighbors(k) {
                stay += w * qx[j];
                reach += w * (S::one() - qx[j]);
            }
            g[k] = -self.ln_q * qx[k] * (stay - reach);
        }
        Ok(g)
    }

    /// Gershgorin bound on the Hessian: `ln²q · max_k 4 Σ_j w_kj`.
    fn beta(&self) -> S {
        let deg = (0..self.n)
            .map(|k| self.neighbors(k).map(|(_, w)| w).sum::<S>())
            .fold(S::zero(), S::max);
        self.ln_q * self.ln_q * S::of(4.0) * deg
    }

    /// `p · Σ_{i≠j} w_ij`, since `1 - q^{x_i} <= p` and `q^{x_j} <= 1`.
    fn value_upper(&self) -> S {
        self.p * self.total_weight
    }
}
