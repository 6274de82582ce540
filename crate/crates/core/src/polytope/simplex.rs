//! Dense two-phase primal simplex with bounded variables.
//!
//! Problems are stated as `maximize c·x` subject to sparse rows
//! `a·x {<=, >=, =} b` and finite lower bounds `l <= x <= u` (`u` may be
//! infinite). A presolve pass turns singleton rows into bounds and removes
//! fixed variables; what remains is solved on a dense tableau with slack
//! columns used as the starting basis wherever possible and artificial
//! columns elsewhere.
//!
//! Pricing is Dantzig's rule until a run of degenerate pivots is observed,
//! after which Bland's smallest-index rule takes over for the rest of the
//! phase, so the method terminates on degenerate problems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LpRow<S> {
    pub coeffs: Vec<(usize, S)>,
    pub kind: RowKind,
    pub rhs: S,
}

#[derive(Clone, Debug)]
pub struct LinearProgram<S> {
    num_vars: usize,
    objective: Vec<S>,
    lower: Vec<S>,
    upper: Vec<S>,
    rows: Vec<LpRow<S>>,
}

#[derive(Clone, Debug)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub objective: S,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_switch: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_pivots: 50_000,
            degenerate_switch: 20,
        }
    }
}

impl<S: Scalar> LinearProgram<S> {
    /// New program over `num_vars` variables, all bounded to `[0, +inf)`.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![S::zero(); num_vars],
            lower: vec![S::zero(); num_vars],
            upper: vec![S::infinity(); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn rows(&self) -> &[LpRow<S>] {
        &self.rows
    }

    pub fn set_objective(&mut self, c: Vec<S>) -> Result<()> {
        crate::error::check_dim(self.num_vars, c.len())?;
        self.objective = c;
        Ok(())
    }

    pub fn objective_mut(&mut self) -> &mut [S] {
        &mut self.objective
    }

    pub fn set_bounds(&mut self, var: usize, lower: S, upper: S) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn bounds(&self, var: usize) -> (S, S) {
        (self.lower[var], self.upper[var])
    }

    /// Adds a row and returns its index (used in infeasibility reports).
    pub fn add_row(&mut self, coeffs: Vec<(usize, S)>, kind: RowKind, rhs: S) -> usize {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars));
        self.rows.push(LpRow { coeffs, kind, rhs });
        self.rows.len() - 1
    }

    /// Largest constraint or bound violation of `x`.
    pub fn residual(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: S = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn maximize(&self) -> Result<LpSolution<S>> {
        self.maximize_with(SimplexOptions::default())
    }

    pub fn minimize(&self) -> Result<LpSolution<S>> {
        let mut neg = self.clone();
        for c in neg.objective.iter_mut() {
            *c = -*c;
        }
        let mut sol = neg.maximize()?;
        sol.objective = -sol.objective;
        Ok(sol)
    }

    pub fn maximize_with(&self, opts: SimplexOptions) -> Result<LpSolution<S>> {
        let pre = presolve(self)?;
        let (x_free, pivots) = if pre.free.is_empty() {
            // Everything fixed: only consistency of the remaining rows matters.
            for (r, row) in pre.rows.iter().enumerate() {
                if !row_satisfied(S::zero(), row.kind, row.rhs) {
                    return Err(Error::Infeasible {
                        row: Some(pre.row_origin[r]),
                        detail: "constraint violated by fixed variables".into(),
                    });
                }
            }
            (Vec::new(), 0)
        } else {
            let mut tab = Tableau::build(&pre);
            tab.run(&pre, opts)?
        };

        let mut x = pre.fixed_value.clone();
        for (k, &j) in pre.free.iter().enumerate() {
            x[j] = pre.shift[k] + x_free[k];
        }
        for j in 0..self.num_vars {
            if x[j] < self.lower[j] {
                x[j] = self.lower[j];
            }
            if x[j] > self.upper[j] {
                x[j] = self.upper[j];
            }
        }
        let objective = self
            .objective
            .iter()
            .zip(&x)
            .map(|(&c, &v)| c * v)
            .sum();
        Ok(LpSolution {
            x,
            objective,
            pivots,
        })
    }
}

fn row_satisfied<S: Scalar>(lhs: S, kind: RowKind, rhs: S) -> bool {
    let tol = S::feas_tol() * (S::one() + rhs.abs());
    match kind {
        RowKind::Le => lhs <= rhs + tol,
        RowKind::Ge => lhs >= rhs - tol,
        RowKind::Eq => (lhs - rhs).abs() <= tol,
    }
}

/// Reduced problem over the non-fixed variables, shifted so that every
/// remaining variable has lower bound zero.
struct Presolved<S> {
    /// Original indices of the remaining variables.
    free: Vec<usize>,
    /// Lower bound of each remaining variable (the shift).
    shift: Vec<S>,
    /// Width `u - l` of each remaining variable.
    width: Vec<S>,
    objective: Vec<S>,
    /// Rows with coefficients indexed into `free`.
    rows: Vec<LpRow<S>>,
    row_origin: Vec<usize>,
    /// Value of every original variable; meaningful for fixed ones.
    fixed_value: Vec<S>,
}

fn presolve<S: Scalar>(lp: &LinearProgram<S>) -> Result<Presolved<S>> {
    let n = lp.num_vars;
    let tol = S::feas_tol();
    let zero_coef = S::pivot_tol();
    let mut lo = lp.lower.clone();
    let mut hi = lp.upper.clone();
    for j in 0..n {
        if !lo[j].is_finite() {
            return Err(Error::Argument(format!("variable {j} has no finite lower bound")));
        }
    }
    let mut bound_source: Vec<Option<usize>> = vec![None; n];
    let mut fixed = vec![false; n];
    let mut row_active = vec![true; lp.rows.len()];

    let check_bounds = |j: usize, lo: &[S], hi: &[S], src: &[Option<usize>]| -> Result<()> {
        if lo[j] > hi[j] + tol * (S::one() + hi[j].abs()) {
            return Err(Error::Infeasible {
                row: src[j],
                detail: format!("bounds of variable {j} cross ({} > {})", lo[j], hi[j]),
            });
        }
        Ok(())
    };

    for j in 0..n {
        check_bounds(j, &lo, &hi, &bound_source)?;
        if hi[j] - lo[j] <= tol {
            fixed[j] = true;
        }
    }

    loop {
        let mut changed = false;
        for (r, row) in lp.rows.iter().enumerate() {
            if !row_active[r] {
                continue;
            }
            let mut rhs = row.rhs;
            let mut live: Option<(usize, S)> = None;
            let mut live_count = 0;
            for &(j, a) in &row.coeffs {
                if a.abs() <= zero_coef {
                    continue;
                }
                if fixed[j] {
                    rhs -= a * lo[j];
                } else {
                    live_count += 1;
                    live = Some((j, a));
                }
            }
            match live_count {
                0 => {
                    if !row_satisfied(S::zero(), row.kind, rhs) {
                        return Err(Error::Infeasible {
                            row: Some(r),
                            detail: format!("constraint row {r} cannot be satisfied"),
                        });
                    }
                    row_active[r] = false;
                }
                1 => {
                    let (j, a) = live.unwrap();
                    let v = rhs / a;
                    // a x <= rhs  ->  x <= v (a > 0) or x >= v (a < 0)
                    let (tighten_hi, tighten_lo) = match (row.kind, a > S::zero()) {
                        (RowKind::Eq, _) => (true, true),
                        (RowKind::Le, true) | (RowKind::Ge, false) => (true, false),
                        (RowKind::Le, false) | (RowKind::Ge, true) => (false, true),
                    };
                    if tighten_hi && v < hi[j] {
                        hi[j] = v;
                        bound_source[j] = Some(r);
                    }
                    if tighten_lo && v > lo[j] {
                        lo[j] = v;
                        bound_source[j] = Some(r);
                    }
                    check_bounds(j, &lo, &hi, &bound_source)?;
                    if hi[j] - lo[j] <= tol {
                        // fixed at lo[j]
                        hi[j] = hi[j].max(lo[j]);
                        fixed[j] = true;
                    }
                    row_active[r] = false;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    let free: Vec<usize> = (0..n).filter(|&j| !fixed[j]).collect();
    let mut index_of = vec![usize::MAX; n];
    for (k, &j) in free.iter().enumerate() {
        index_of[j] = k;
    }
    let shift: Vec<S> = free.iter().map(|&j| lo[j]).collect();
    let width: Vec<S> = free.iter().map(|&j| hi[j] - lo[j]).collect();
    let objective: Vec<S> = free.iter().map(|&j| lp.objective[j]).collect();

    let mut rows = Vec::new();
    let mut row_origin = Vec::new();
    for (r, row) in lp.rows.iter().enumerate() {
        if !row_active[r] {
            continue;
        }
        let mut rhs = row.rhs;
        let mut coeffs = Vec::with_capacity(row.coeffs.len());
        for &(j, a) in &row.coeffs {
            if a.abs() <= zero_coef {
                continue;
            }
            // fixed variables sit at lo[j]; free ones are shifted by lo[j]
            rhs -= a * lo[j];
            if !fixed[j] {
                coeffs.push((index_of[j], a));
            }
        }
        rows.push(LpRow {
            coeffs,
            kind: row.kind,
            rhs,
        });
        row_origin.push(r);
    }

    let mut fixed_value = lo;
    for j in 0..n {
        if !fixed[j] {
            fixed_value[j] = S::zero();
        }
    }

    Ok(Presolved {
        free,
        shift,
        width,
        objective,
        rows,
        row_origin,
        fixed_value,
    })
}

/// Column kinds of the working tableau.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Col {
    Structural,
    Slack,
    Artificial,
}

struct Tableau<S> {
    m: usize,
    ncols: usize,
    /// Row-major `m x ncols` matrix `B^-1 A`.
    t: Vec<S>,
    /// Current values of the basic variables.
    beta: Vec<S>,
    /// Right-hand side after sign normalisation (for recomputing `beta`).
    rhs: Vec<S>,
    /// Original constraint matrix after sign normalisation, row-major.
    a: Vec<S>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<S>,
    kind: Vec<Col>,
    /// Column holding the initial identity entry of each row.
    init_basis: Vec<usize>,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn build(pre: &Presolved<S>) -> Self {
        let m = pre.rows.len();
        let nv = pre.free.len();
        let n_slack = pre
            .rows
            .iter()
            .filter(|r| r.kind != RowKind::Eq)
            .count();
        // Decide which rows need an artificial column.
        let mut needs_art = Vec::with_capacity(m);
        let mut sign = Vec::with_capacity(m);
        for row in &pre.rows {
            let s = if row.rhs < S::zero() { -S::one() } else { S::one() };
            sign.push(s);
            let slack_coef = match row.kind {
                RowKind::Le => S::one(),
                RowKind::Ge => -S::one(),
                RowKind::Eq => S::zero(),
            } * s;
            needs_art.push(slack_coef <= S::zero());
        }
        let n_art = needs_art.iter().filter(|&&b| b).count();
        let ncols = nv + n_slack + n_art;

        let mut a = vec![S::zero(); m * ncols];
        let mut rhs = vec![S::zero(); m];
        let mut upper = vec![S::infinity(); ncols];
        let mut kind = vec![Col::Structural; ncols];
        upper[..nv].copy_from_slice(&pre.width);
        let mut init_basis = vec![0; m];
        let mut next_slack = nv;
        let mut next_art = nv + n_slack;
        for (i, row) in pre.rows.iter().enumerate() {
            let s = sign[i];
            for &(k, v) in &row.coeffs {
                a[i * ncols + k] += s * v;
            }
            rhs[i] = s * row.rhs;
            if row.kind != RowKind::Eq {
                let c = if row.kind == RowKind::Le { S::one() } else { -S::one() };
                a[i * ncols + next_slack] = s * c;
                kind[next_slack] = Col::Slack;
                if !needs_art[i] {
                    init_basis[i] = next_slack;
                }
                next_slack += 1;
            }
            if needs_art[i] {
                a[i * ncols + next_art] = S::one();
                kind[next_art] = Col::Artificial;
                init_basis[i] = next_art;
                next_art += 1;
            }
        }

        let mut is_basic = vec![false; ncols];
        for &b in &init_basis {
            is_basic[b] = true;
        }
        Tableau {
            m,
            ncols,
            t: a.clone(),
            beta: rhs.clone(),
            rhs,
            a,
            basis: init_basis.clone(),
            is_basic,
            at_upper: vec![false; ncols],
            upper,
            kind,
            init_basis,
            pivots: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> S {
        self.t[i * self.ncols + j]
    }

    fn nonbasic_value(&self, j: usize) -> S {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            S::zero()
        }
    }

    /// Reduced costs `c_j - c_B^T B^-1 A_j` for the given column costs.
    fn reduced_costs(&self, cost: &[S]) -> Vec<S> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb == S::zero() {
                continue;
            }
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            for (dj, &tij) in d.iter_mut().zip(row) {
                *dj -= cb * tij;
            }
        }
        d
    }

    /// Recomputes basic values from the original data using the explicit
    /// inverse held in the initial-basis columns.
    fn refresh_beta(&mut self) {
        let mut b = self.rhs.clone();
        for j in 0..self.ncols {
            if self.is_basic[j] || !self.at_upper[j] {
                continue;
            }
            let u = self.upper[j];
            for (i, bi) in b.iter_mut().enumerate() {
                *bi -= self.a[i * self.ncols + j] * u;
            }
        }
        for i in 0..self.m {
            let mut v = S::zero();
            for (k, &bk) in b.iter().enumerate() {
                // column init_basis[k] of B^-1 A equals column k of B^-1
                v += self.at(i, self.init_basis[k]) * bk;
            }
            self.beta[i] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [S]) {
        let nc = self.ncols;
        let p = self.t[r * nc + j];
        for v in &mut self.t[r * nc..(r + 1) * nc] {
            *v /= p;
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        for chunk in before.chunks_mut(nc).chain(after.chunks_mut(nc)) {
            let f = chunk[j];
            if f != S::zero() {
                for (v, &pv) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                chunk[j] = S::zero();
            }
        }
        let f = d[j];
        if f != S::zero() {
            for (dv, &pv) in d.iter_mut().zip(prow.iter()) {
                *dv -= f * pv;
            }
            d[j] = S::zero();
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.pivots += 1;
    }

    /// Primal simplex iterations maximising `cost`. Columns in `barred`
    /// never enter the basis.
    fn optimize(&mut self, cost: &[S], barred: &[bool], opts: SimplexOptions) -> Result<()> {
        let dtol = S::feas_tol();
        let ptol = S::pivot_tol();
        let mut d = self.reduced_costs(cost);
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.pivots >= opts.max_pivots {
                return Err(Error::Solver(format!(
                    "pivot limit {} exceeded",
                    opts.max_pivots
                )));
            }
            // Entering column.
            let mut enter: Option<usize> = None;
            let mut best = S::zero();
            for j in 0..self.ncols {
                if self.is_basic[j] || barred[j] {
                    continue;
                }
                let dj = d[j];
                let eligible = if self.at_upper[j] { dj < -dtol } else { dj > dtol };
                if !eligible {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some(j);
                }
            }
            let Some(j) = enter else {
                return Ok(());
            };
            let dir = if self.at_upper[j] { -S::one() } else { S::one() };

            // Ratio test: smallest row limit, ties to the smallest basic index.
            let mut row_step = S::infinity();
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let alpha = dir * self.at(i, j);
                let bi = self.basis[i];
                let limit = if alpha > ptol {
                    self.beta[i].max(S::zero()) / alpha
                } else if alpha < -ptol && self.upper[bi].is_finite() {
                    (self.upper[bi] - self.beta[i]).max(S::zero()) / (-alpha)
                } else {
                    continue;
                };
                let take = limit < row_step
                    || (limit == row_step
                        && leave.is_some_and(|(li, _)| bi < self.basis[li]));
                if take {
                    row_step = limit;
                    leave = Some((i, alpha < S::zero()));
                }
            }
            let flip = self.upper[j];
            if row_step.is_infinite() && flip.is_infinite() {
                return Err(Error::Unbounded);
            }
            let step = row_step.min(flip);

            for i in 0..self.m {
                let alpha = dir * self.at(i, j);
                if alpha != S::zero() {
                    self.beta[i] -= step * alpha;
                }
            }

            if step <= ptol {
                degenerate_run += 1;
                if degenerate_run >= opts.degenerate_switch {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            match leave {
                Some((r, to_upper)) if row_step < flip => {
                    let entering_value = self.nonbasic_value(j) + dir * step;
                    let leaving = self.basis[r];
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[j] = false;
                    self.pivot(r, j, &mut d);
                    self.beta[r] = entering_value;
                }
                _ => {
                    // the entering variable reaches its opposite bound first
                    self.at_upper[j] = !self.at_upper[j];
                    self.pivots += 1;
                }
            }
        }
    }

    fn run(&mut self, pre: &Presolved<S>, opts: SimplexOptions) -> Result<(Vec<S>, usize)> {
        let nv = pre.free.len();
        let has_art = self.kind.iter().any(|&k| k == Col::Artificial);
        let no_bar = vec![false; self.ncols];
        if has_art {
            let cost: Vec<S> = self
                .kind
                .iter()
                .map(|&k| if k == Col::Artificial { -S::one() } else { S::zero() })
                .collect();
            self.optimize(&cost, &no_bar, opts)?;
            self.refresh_beta();
            let scale = S::one()
                + self
                    .rhs
                    .iter()
                    .fold(S::zero(), |acc, &v| acc.max(v.abs()));
            let infeas_tol = S::feas_tol() * scale;
            for i in 0..self.m {
                let b = self.basis[i];
                if self.kind[b] == Col::Artificial && self.beta[i] > infeas_tol {
                    let art_row = (0..self.m)
                        .find(|&k| self.init_basis[k] == b)
                        .unwrap_or(i);
                    return Err(Error::Infeasible {
                        row: Some(pre.row_origin[art_row]),
                        detail: format!(
                            "phase one left constraint row {} violated by {}",
                            pre.row_origin[art_row], self.beta[i]
                        ),
                    });
                }
            }
            // Drive zero-level artificials out of the basis where possible.
            let mut dummy = vec![S::zero(); self.ncols];
            for i in 0..self.m {
                let b = self.basis[i];
                if self.kind[b] != Col::Artificial {
                    continue;
                }
                let mut best: Option<(usize, S)> = None;
                for j in 0..self.ncols {
                    if self.is_basic[j] || self.kind[j] == Col::Artificial {
                        continue;
                    }
                    let v = self.at(i, j).abs();
                    if v > S::pivot_tol() && best.map_or(true, |(_, bv)| v > bv) {
                        best = Some((j, v));
                    }
                }
                if let Some((j, _)) = best {
                    let val = self.nonbasic_value(j);
                    self.at_upper[j] = false;
                    self.at_upper[b] = false;
                    self.pivot(i, j, &mut dummy);
                    self.beta[i] = val;
                }
            }
            // Remaining artificials are pinned at zero.
            for j in 0..self.ncols {
                if self.kind[j] == Col::Artificial {
                    self.upper[j] = S::zero();
                    self.at_upper[j] = false;
                }
            }
            self.refresh_beta();
        }

        let barred: Vec<bool> = self.kind.iter().map(|&k| k == Col::Artificial).collect();
        let mut cost = vec![S::zero(); self.ncols];
        cost[..nv].copy_from_slice(&pre.objective);
        self.optimize(&cost, &barred, opts)?;
        self.refresh_beta();

        let mut x = vec![S::zero(); nv];
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = self.nonbasic_value(k);
        }
        for i in 0..self.m {
            let b = self.basis[i];
            if b < nv {
                x[b] = self.beta[i].max(S::zero()).min(self.upper[b]);
            }
        }
        Ok((x, self.pivots))
    }
}
