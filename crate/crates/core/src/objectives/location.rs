use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::scalar::Scalar;

/// Multilinear extension of a facility-location summary with costs:
/// `F(x) = (1/r) Σ_i Σ_j x_j M_ij Π_{j' ≻_i j} (1 - x_{j'}) - Σ_j x_j d_j`.
///
/// Row `i` of `M` scores every candidate `j` for user `i`; `≻_i` orders the
/// candidates by score, ties going to the larger index. At a 0/1 point this
/// is the average best score over the chosen set minus its cost.
#[derive(Clone, Debug, PartialEq)]
pub struct LocationObjective<S> {
    n: usize,
    rows: usize,
    scores: Vec<S>,
    costs: Vec<S>,
    /// Per row, candidate indices from best to worst.
    order: Vec<usize>,
    max_score: S,
}

impl<S: Scalar> LocationObjective<S> {
    /// `scores` is row-major `rows × n` and must be non-negative; `costs` has length `n`.
    pub fn new(rows: usize, n: usize, scores: Vec<S>, costs: Vec<S>) -> Result<Self> {
        check_dim(rows * n, scores.len())?;
        check_dim(n, costs.len())?;
        if rows == 0 {
            return Err(Error::Argument("location objective needs at least one user row".into()));
        }
        if scores.iter().any(|&v| !v.is_finite() || v < S::zero()) {
            return Err(Error::Validation("scores must be finite and non-negative".into()));
        }
        if costs.iter().any(|&v| !v.is_finite()) {
            return Err(Error::Validation("costs must be finite".into()));
        }
        let mut order = Vec::with_capacity(rows * n);
        for row in scores.chunks_exact(n) {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                row[b]
                    .partial_cmp(&row[a])
                    .expect("finite scores")
                    .then(b.cmp(&a))
            });
            order.extend(idx);
        }
        let max_score = scores.iter().copied().fold(S::zero(), S::max);
        Ok(LocationObjective {
            n,
            rows,
            scores,
            costs,
            order,
            max_score,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn scores(&self) -> &[S] {
        &self.scores
    }

    pub fn costs(&self) -> &[S] {
        &self.costs
    }

    /// The set function the extension interpolates:
    /// `(1/r) Σ_i max_{j ∈ set} M_ij - Σ_{j ∈ set} d_j` (empty max is 0).
    pub fn discrete_value(&self, set: &[bool]) -> Result<S> {
        check_dim(self.n, set.len())?;
        let mut total = S::zero();
        for row in self.scores.chunks_exact(self.n) {
            let best = row
                .iter()
                .zip(set)
                .filter(|(_, &s)| s)
                .map(|(&v, _)| v)
                .fold(S::zero(), S::max);
            total += best;
        }
        let cost: S = self.costs.iter().zip(set).filter(|(_, &s)| s).map(|(&c, _)| c).sum();
        Ok(total / S::of(self.rows as f64) - cost)
    }

    fn row_order(&self, i: usize) -> &[usize] {
        &self.order[i * self.n..(i + 1) * self.n]
    }
}

impl<S: Scalar> Objective<S> for LocationObjective<S> {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[S]) -> Result<S> {
        check_dim(self.n, x.len())?;
        let mut total = S::zero();
        for i in 0..self.rows {
            let row = &self.scores[i * self.n..(i + 1) * self.n];
            let mut unclaimed = S::one();
            for &j in self.row_order(i) {
                total += unclaimed * x[j] * row[j];
                unclaimed *= S::one() - x[j];
            }
        }
        let cost: S = x.iter().zip(&self.costs).map(|(&a, &c)| a * c).sum();
        Ok(total / S::of(self.rows as f64) - cost)
    }

    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        check_dim(self.n, x.len())?;
        let mut g = vec![S::zero(); self.n];
        let mut prefix = vec![S::zero(); self.n];
        for i in 0..self.rows {
            let row = &self.scores[i * self.n..(i + 1) * self.n];
            let ord = self.row_order(i);
            let mut unclaimed = S::one();
            for (t, &j) in ord.iter().enumerate() {
                prefix[t] = unclaimed;
                unclaimed *= S::one() - x[j];
            }
            // tail = value of the candidates after position t, given none before
            let mut tail = S::zero();
            for (t, &j) in ord.iter().enumerate().rev() {
                g[j] += prefix[t] * (row[j] - tail);
                tail = x[j] * row[j] + (S::one() - x[j]) * tail;
            }
        }
        let scale = S::one() / S::of(self.rows as f64);
        for (gj, &c) in g.iter_mut().zip(&self.costs) {
            *gj = *gj * scale - c;
        }
        Ok(g)
    }

    /// Every second partial derivative is bounded by `max M`, so the
    /// Hessian's row sums are at most `n · max M`.
    fn beta(&self) -> S {
        S::of(self.n as f64) * self.max_score
    }

    /// `(1/r) Σ_i max_j M_ij + Σ_j max(-d_j, 0)`.
    fn value_upper(&self) -> S {
        let best: S = self
            .scores
            .chunks_exact(self.n)
            .map(|row| row.iter().copied().fold(S::zero(), S::max))
            .sum();
        let neg_cost: S = self.costs.iter().map(|&c| (-c).max(S::zero())).sum();
        best / S::of(self.rows as f64) + neg_cost
    }
}
