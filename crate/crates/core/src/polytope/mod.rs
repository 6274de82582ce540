//! Halfspace-represented polytopes inside the unit box, the decomposition
//! `K = (N + D) ∩ [0,1]^n`, and the linear-programming and projection
//! machinery the solvers run on.

mod decomposition;
mod project;
pub mod simplex;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vecmath::Point;

pub use decomposition::Decomposition;
pub use project::{ProjectionOptions, Projector};
pub use simplex::{LinearProgram, LpRow, LpSolution, RowKind, SimplexOptions};

/// One constraint `⟨a, x⟩ <= b` (or `= b` when `eq` is set), with `a` stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace<S> {
    pub coeffs: Vec<(usize, S)>,
    pub rhs: S,
    pub eq: bool,
}

impl<S: Scalar> Halfspace<S> {
    pub fn le(coeffs: Vec<(usize, S)>, rhs: S) -> Self {
        Halfspace {
            coeffs,
            rhs,
            eq: false,
        }
    }

    pub fn eq(coeffs: Vec<(usize, S)>, rhs: S) -> Self {
        Halfspace {
            coeffs,
            rhs,
            eq: true,
        }
    }

    pub fn from_dense(a: &[S], rhs: S, eq: bool) -> Self {
        let coeffs = a
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != S::zero())
            .map(|(j, &v)| (j, v))
            .collect();
        Halfspace { coeffs, rhs, eq }
    }

    pub fn lhs(&self, x: &[S]) -> S {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Violation of the constraint at `x` against a right-hand side scaled by `t`.
    fn violation_scaled(&self, x: &[S], t: S) -> S {
        let d = self.lhs(x) - t * self.rhs;
        if self.eq {
            d.abs()
        } else {
            d.max(S::zero())
        }
    }
}

/// `{x : A x <= b} ∩ [0,1]^n`, with some rows possibly equalities.
///
/// Nonemptiness is certified by a feasibility LP at construction. When the
/// polytope is declared down-closed the origin must be feasible; the
/// remainder of the property is only probed, see
/// [`HPolytope::validate_down_closed`].
#[derive(Clone, Debug, PartialEq)]
pub struct HPolytope<S> {
    n: usize,
    rows: Vec<Halfspace<S>>,
    down_closed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow<S> {
    a: Vec<S>,
    b: S,
    #[serde(default)]
    eq: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolytope<S> {
    n: usize,
    rows: Vec<RawRow<S>>,
    #[serde(default)]
    down_closed: bool,
}

impl<S: Scalar> Serialize for HPolytope<S> {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        let rows = self
            .rows
            .iter()
            .map(|h| {
                let mut a = vec![S::zero(); self.n];
                for &(j, v) in &h.coeffs {
                    a[j] += v;
                }
                RawRow { a, b: h.rhs, eq: h.eq }
            })
            .collect();
        RawPolytope {
            n: self.n,
            rows,
            down_closed: self.down_closed,
        }
        .serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for HPolytope<S> {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        let raw = RawPolytope::<S>::deserialize(d)?;
        let mut rows = Vec::with_capacity(raw.rows.len());
        for (i, r) in raw.rows.into_iter().enumerate() {
            if r.a.len() != raw.n {
                return Err(serde::de::Error::custom(format!(
                    "row {i} has {} coefficients, expected {}",
                    r.a.len(),
                    raw.n
                )));
            }
            rows.push(Halfspace::from_dense(&r.a, r.b, r.eq));
        }
        HPolytope::new(raw.n, rows, raw.down_closed).map_err(serde::de::Error::custom)
    }
}

/// Outcome of a randomized down-closedness probe.
#[derive(Clone, Debug, PartialEq)]
pub struct DownClosedReport {
    pub samples: usize,
    pub violations: usize,
    pub worst_residual: f64,
}

impl<S: Scalar> HPolytope<S> {
    pub fn new(n: usize, rows: Vec<Halfspace<S>>, down_closed: bool) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(Error::Validation(format!("row {i} has a non-finite offset")));
            }
            for &(j, a) in &r.coeffs {
                if j >= n {
                    return Err(Error::Validation(format!(
                        "row {i} references coordinate {j} of a {n}-dimensional body"
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::Validation(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        let p = HPolytope {
            n,
            rows,
            down_closed,
        };
        if down_closed {
            let origin = vec![S::zero(); n];
            let r = p.residual(&origin);
            if r > S::feas_tol() {
                return Err(Error::Validation(format!(
                    "declared down-closed but the origin violates a row by {r}"
                )));
            }
        } else {
            let lp = p.feasibility_program();
            lp.maximize().map_err(|e| match e {
                Error::Infeasible { row, detail } => Error::Infeasible {
                    row,
                    detail: format!("empty polytope: {detail}"),
                },
                other => other,
            })?;
        }
        Ok(p)
    }

    /// The unit box itself.
    pub fn unit_box(n: usize) -> Self {
        HPolytope {
            n,
            rows: Vec::new(),
            down_closed: true,
        }
    }

    /// The singleton `{0}`.
    pub fn origin(n: usize) -> Self {
        HPolytope {
            n,
            rows: (0..n)
                .map(|j| Halfspace::le(vec![(j, S::one())], S::zero()))
                .collect(),
            down_closed: true,
        }
    }

    /// `{x : Σ x_i <= r}`; down-closed.
    pub fn sum_at_most(n: usize, r: S) -> Result<Self> {
        let row = Halfspace::le((0..n).map(|j| (j, S::one())).collect(), r);
        HPolytope::new(n, vec![row], true)
    }

    /// `{x : Σ x_i = r}`.
    pub fn sum_equal(n: usize, r: S) -> Result<Self> {
        let row = Halfspace::eq((0..n).map(|j| (j, S::one())).collect(), r);
        HPolytope::new(n, vec![row], false)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Halfspace<S>] {
        &self.rows
    }

    pub fn is_down_closed(&self) -> bool {
        self.down_closed
    }

    /// Largest violation of a row or of the box at `x`.
    pub fn residual(&self, x: &[S]) -> S {
        self.residual_scaled(x, S::one())
    }

    /// Largest violation of `x ∈ t·P`, i.e. `A x <= t b` and `0 <= x <= t`.
    pub fn residual_scaled(&self, x: &[S], t: S) -> S {
        let mut worst = S::zero();
        for &v in x {
            worst = worst.max(-v).max(v - t);
        }
        for r in &self.rows {
            worst = worst.max(r.violation_scaled(x, t));
        }
        worst
    }

    pub fn contains(&self, x: &[S]) -> bool {
        x.len() == self.n && self.residual(x) <= S::feas_tol()
    }

    /// Appends this polytope's rows and box bounds for the variable block
    /// starting at `offset`.
    pub fn add_to_program(&self, lp: &mut LinearProgram<S>, offset: usize) {
        for j in 0..self.n {
            let (lo, hi) = lp.bounds(offset + j);
            lp.set_bounds(offset + j, lo.max(S::zero()), hi.min(S::one()));
        }
        for r in &self.rows {
            let coeffs = r.coeffs.iter().map(|&(j, a)| (offset + j, a)).collect();
            let kind = if r.eq { RowKind::Eq } else { RowKind::Le };
            lp.add_row(coeffs, kind, r.rhs);
        }
    }

    fn feasibility_program(&self) -> LinearProgram<S> {
        let mut lp = LinearProgram::new(self.n);
        self.add_to_program(&mut lp, 0);
        lp
    }

    /// `argmax_{x ∈ P} ⟨c, x⟩`.
    pub fn maximize_linear(&self, c: &[S]) -> Result<LpSolution<S>> {
        check_dim(self.n, c.len())?;
        let mut lp = self.feasibility_program();
        lp.set_objective(c.to_vec())?;
        lp.maximize()
    }

    /// `(min x_j, max x_j)` over the body, for every coordinate (`2n` LPs).
    pub fn coordinate_ranges(&self) -> Result<Vec<(S, S)>> {
        let mut out = Vec::with_capacity(self.n);
        let mut c = vec![S::zero(); self.n];
        for j in 0..self.n {
            c[j] = S::one();
            let hi = self.maximize_linear(&c)?.objective;
            c[j] = -S::one();
            let lo = -self.maximize_linear(&c)?.objective;
            c[j] = S::zero();
            out.push((lo, hi.max(lo)));
        }
        Ok(out)
    }

    /// `sqrt(Σ_j (hi_j - lo_j)^2)`, an upper bound on the diameter.
    pub fn diameter_upper(&self) -> Result<S> {
        Ok(self
            .coordinate_ranges()?
            .into_iter()
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<S>()
            .sqrt())
    }

    /// A point of minimum `ℓ∞` norm together with that norm.
    ///
    /// Among the minimizers, the one returned also minimizes `Σ x_i`
    /// (second LP), which pins down otherwise free coordinates to their
    /// smallest admissible value.
    pub fn min_linf_point(&self) -> Result<(Point<S>, S)> {
        let n = self.n;
        let mut lp = LinearProgram::new(n + 1);
        self.add_to_program(&mut lp, 0);
        lp.set_bounds(n, S::zero(), S::one());
        for j in 0..n {
            lp.add_row(vec![(j, S::one()), (n, -S::one())], RowKind::Le, S::zero());
        }
        let mut c = vec![S::zero(); n + 1];
        c[n] = S::one();
        lp.set_objective(c)?;
        let t = lp.minimize()?.objective.max(S::zero());

        let mut lp = self.feasibility_program();
        for j in 0..n {
            lp.set_bounds(j, S::zero(), t.min(S::one()));
        }
        lp.set_objective(vec![S::one(); n])?;
        let sol = lp.minimize()?;
        let x = Point::clamped(sol.x)?;
        let norm = x.linf_norm();
        Ok((x, norm))
    }

    /// Euclidean projection of `y` onto `P` (Dykstra's alternating projections).
    pub fn project(&self, y: &[S]) -> Result<Point<S>> {
        self.project_with(y, ProjectionOptions::default())
    }

    pub fn project_with(&self, y: &[S], opts: ProjectionOptions) -> Result<Point<S>> {
        check_dim(self.n, y.len())?;
        project::dykstra(self, y, opts)
    }

    /// Draws feasible points through random-objective LPs, then a uniformly
    /// random point dominated by each, and counts dominated points that fall
    /// outside the body.
    pub fn validate_down_closed<R: Rng + ?Sized>(
        &self,
        samples: usize,
        rng: &mut R,
    ) -> DownClosedReport {
        let mut violations = 0;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let c: Vec<S> = (0..self.n)
                .map(|_| S::of(rng.random_range(-1.0..1.0)))
                .collect();
            let Ok(sol) = self.maximize_linear(&c) else {
                continue;
            };
            let below: Vec<S> = sol
                .x
                .iter()
                .map(|&v| v * S::of(rng.random::<f64>()))
                .collect();
            let r = self.residual(&below);
            if r > S::feas_tol() {
                violations += 1;
                worst = worst.max(r.to_f64_lossy());
            }
        }
        DownClosedReport {
            samples,
            violations,
            worst_residual: worst,
        }
    }
}
