//! The hybrid Frank-Wolfe / continuous-greedy procedures.
//!
//! All three keep `y ∈ N` (moved by convex combination towards `a`) and a
//! down-closed component `z` (grown from `0`), and output `y ⊕ z`.

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::offline::trace::{audit_hybrid, Direction, InvariantKind, IterateRecord, Trace, Variant};
use crate::offline::{snap_hybrid_steps, snap_steps, snap_switch};
use crate::polytope::{Decomposition, LinearProgram, RowKind};
use crate::scalar::Scalar;
use crate::vecmath::psum_slices;

fn push_record<S: Scalar, F: Objective<S> + ?Sized>(
    trace: &mut Trace<S>,
    obj: &F,
    dec: &Decomposition<S>,
    i: usize,
    y: &[S],
    z: &[S],
    direction: Option<Direction<S>>,
) -> Result<()> {
    let w = psum_slices(y, z);
    let f_w = obj.value(&w)?;
    let f_z = obj.value(z)?;
    audit_hybrid(trace, dec, i, y, z, &w);
    trace.records.push(IterateRecord {
        i,
        y: y.to_vec(),
        z: z.to_vec(),
        w,
        f_w,
        f_z,
        direction,
    });
    Ok(())
}

fn check_inputs<S: Scalar, F: Objective<S> + ?Sized>(obj: &F, dec: &Decomposition<S>) -> Result<()> {
    crate::error::check_dim(dec.dim(), obj.dim())
}

/// Hybrid for a known value `f_p1` of the down-closed comparator.
///
/// Every iteration solves one LP over `(a, b)` that also demands
/// `⟨b ⊙ (1-z), ∇F(z)⟩ >= (1-ε)^{i-1} f_p1 - F(z)`. If no direction meets
/// that growth requirement the run stops with an infeasibility error: the
/// supplied value is larger than any down-closed point can certify.
pub fn run_alg1<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    epsilon: S,
    f_p1: S,
) -> Result<Trace<S>> {
    check_inputs(obj, dec)?;
    if !(f_p1 >= S::zero()) || !f_p1.is_finite() {
        return Err(Error::Argument(format!("comparator value {f_p1} must be finite and >= 0")));
    }
    let steps = snap_steps(epsilon.to_f64_lossy())?;
    let eps = S::one() / S::of(steps as f64);
    let n = dec.dim();
    let m = dec.m();
    let mut trace = Trace::new(Variant::Alg1, eps, S::zero(), m);
    let mut y = dec.y0().to_vec();
    let mut z = vec![S::zero(); n];
    push_record(&mut trace, obj, dec, 0, &y, &z, None)?;

    for i in 1..=steps {
        let w = psum_slices(&y, &z);
        let gw = obj.gradient(&w)?;
        let gz = obj.gradient(&z)?;
        let fz = trace.records[i - 1].f_z;
        let required = (S::one() - eps).powi(i as i32 - 1) * f_p1 - fz;

        let mut lp = LinearProgram::new(2 * n);
        dec.general().add_to_program(&mut lp, 0);
        dec.down().add_to_program(&mut lp, n);
        let growth: Vec<(usize, S)> = (0..n)
            .map(|j| (n + j, (S::one() - z[j]) * gz[j]))
            .filter(|&(_, c)| c != S::zero())
            .collect();
        let growth_row = lp.add_row(growth, RowKind::Ge, required);
        for j in 0..n {
            lp.add_row(
                vec![(j, S::one()), (n + j, S::one() - y[j])],
                RowKind::Le,
                S::one(),
            );
        }
        let mut c = vec![S::zero(); 2 * n];
        for j in 0..n {
            let base = gw[j] * (S::one() - z[j]);
            c[j] = base;
            c[n + j] = base * (S::one() - y[j]);
        }
        lp.set_objective(c)?;
        let sol = lp.maximize().map_err(|e| match e {
            Error::Infeasible { .. } => Error::Infeasible {
                row: Some(growth_row),
                detail: format!(
                    "iteration {i}: no b ∈ D achieves ⟨b ⊙ (1-z), ∇F(z)⟩ >= {required}; \
                     the supplied comparator value {f_p1} is too large"
                ),
            },
            other => other,
        })?;
        let (a, b) = sol.x.split_at(n);

        let achieved: S = (0..n).map(|j| b[j] * (S::one() - z[j]) * gz[j]).sum();
        let slack = required - achieved;
        if slack > S::of(1e-7).max(S::feas_tol()) {
            trace.flag(i, InvariantKind::Growth, slack);
        }

        for j in 0..n {
            y[j] = (S::one() - eps) * y[j] + eps * a[j];
            let grow = eps * (S::one() - z[j]) * b[j];
            z[j] += grow;
        }
        let dir = Direction {
            a: a.to_vec(),
            b: b.to_vec(),
            c: None,
            lp_value: sol.objective,
        };
        push_record(&mut trace, obj, dec, i, &y, &z, Some(dir))?;
    }
    trace.finish(0, steps);
    Ok(trace)
}

/// Guess-free hybrid with switching time `t_s`.
///
/// `ε` is snapped to `1/max(30, ⌈1/ε⌉)` and `t_s` down to the ε-grid; the
/// effective values are stored in the trace. The returned point is the best
/// `y ⊕ z` among iterations `t_s/ε ..= 1/ε`.
pub fn run_alg2<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    epsilon: S,
    t_s: S,
) -> Result<Trace<S>> {
    check_inputs(obj, dec)?;
    let steps = snap_hybrid_steps(epsilon.to_f64_lossy())?;
    let switch = snap_switch(t_s.to_f64_lossy(), steps)?;
    guess_free(obj, dec, steps, switch, false)
}

/// Guess-free hybrid with the empirical improvements: `z` may also shrink
/// (direction `c`), grows by `ε (b - c)` with `b <= (1-z) ⊙ (1-a)`, and the
/// best iterate over all `i` is returned.
pub fn run_alg3<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    epsilon: S,
    t_s: S,
) -> Result<Trace<S>> {
    check_inputs(obj, dec)?;
    let steps = snap_hybrid_steps(epsilon.to_f64_lossy())?;
    let switch = snap_switch(t_s.to_f64_lossy(), steps)?;
    guess_free(obj, dec, steps, switch, true)
}

/// Runs [`run_alg2`] for every `t_s` on the ε-grid and keeps the best
/// output. Returns that trace and its `t_s`.
pub fn run_alg2_grid<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    epsilon: S,
) -> Result<(Trace<S>, S)> {
    grid(obj, dec, epsilon, false)
}

/// [`run_alg3`] over every grid `t_s`.
pub fn run_alg3_grid<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    epsilon: S,
) -> Result<(Trace<S>, S)> {
    grid(obj, dec, epsilon, true)
}

fn grid<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    epsilon: S,
    empirical: bool,
) -> Result<(Trace<S>, S)> {
    check_inputs(obj, dec)?;
    let steps = snap_hybrid_steps(epsilon.to_f64_lossy())?;
    let mut best: Option<Trace<S>> = None;
    for switch in 0..=steps {
        let t = guess_free(obj, dec, steps, switch, empirical)?;
        if best.as_ref().is_none_or(|b| t.best.value > b.best.value) {
            best = Some(t);
        }
    }
    let t = best.expect("grid has at least one point");
    let t_s = t.t_s;
    Ok((t, t_s))
}

/// Shared body of the guess-free variants with `ε = 1/steps` and
/// `t_s = switch/steps`.
pub(crate) fn guess_free<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    steps: usize,
    switch: usize,
    empirical: bool,
) -> Result<Trace<S>> {
    let n = dec.dim();
    let eps = S::one() / S::of(steps as f64);
    let t_s = S::of(switch as f64) / S::of(steps as f64);
    let m = dec.m();
    let variant = if empirical { Variant::Alg3 } else { Variant::Alg2 };
    let mut trace = Trace::new(variant, eps, t_s, m);
    let mut y = dec.y0().to_vec();
    let mut z = vec![S::zero(); n];
    push_record(&mut trace, obj, dec, 0, &y, &z, None)?;

    for i in 1..=steps {
        let w = psum_slices(&y, &z);
        let gw = obj.gradient(&w)?;
        let tau = eps * S::of(i as f64);
        let dir = if i <= switch {
            let gz = obj.gradient(&z)?;
            let front = (tau + tau).exp();
            let back = (S::one() - m) * tau.exp() * (t_s - tau);
            if empirical {
                empirical_phase_one(dec, &y, &z, &gw, &gz, front, back)?
            } else {
                phase_one(dec, &y, &z, &gw, &gz, front, back)?
            }
        } else if empirical {
            empirical_phase_two(dec, &y, &z, &gw)?
        } else {
            phase_two(dec, &y, &z, &gw)?
        };

        for j in 0..n {
            y[j] = (S::one() - eps) * y[j] + eps * dir.a[j];
            match &dir.c {
                Some(c) => z[j] += eps * (dir.b[j] - c[j]),
                None => {
                    let grow = eps * (S::one() - z[j]) * dir.b[j];
                    z[j] += grow;
                }
            }
        }
        if i > switch {
            // a = y exactly, so keep y bit-identical instead of re-mixing it
            y.copy_from_slice(&dir.a);
        }
        push_record(&mut trace, obj, dec, i, &y, &z, Some(dir))?;
    }

    if !empirical && switch > 0 {
        potential_diagnostics(&mut trace, obj, dec, switch)?;
    }
    let first = if empirical { 0 } else { switch };
    trace.finish(first, steps);
    Ok(trace)
}

fn phase_one<S: Scalar>(
    dec: &Decomposition<S>,
    y: &[S],
    z: &[S],
    gw: &[S],
    gz: &[S],
    front: S,
    back: S,
) -> Result<Direction<S>> {
    let n = dec.dim();
    let mut lp = dec.joint_program();
    let mut c = vec![S::zero(); 2 * n];
    for j in 0..n {
        let base = front * gw[j] * (S::one() - z[j]);
        c[j] = base;
        c[n + j] = base * (S::one() - y[j]) + back * gz[j] * (S::one() - z[j]);
    }
    lp.set_objective(c)?;
    let sol = lp.maximize()?;
    let (a, b) = sol.x.split_at(n);
    Ok(Direction {
        a: a.to_vec(),
        b: b.to_vec(),
        c: None,
        lp_value: sol.objective,
    })
}

fn phase_two<S: Scalar>(dec: &Decomposition<S>, y: &[S], z: &[S], gw: &[S]) -> Result<Direction<S>> {
    let c: Vec<S> = (0..dec.dim())
        .map(|j| gw[j] * (S::one() - z[j]) * (S::one() - y[j]))
        .collect();
    let sol = dec.down().maximize_linear(&c)?;
    Ok(Direction {
        a: y.to_vec(),
        b: sol.x,
        c: None,
        lp_value: sol.objective,
    })
}

fn empirical_phase_one<S: Scalar>(
    dec: &Decomposition<S>,
    y: &[S],
    z: &[S],
    gw: &[S],
    gz: &[S],
    front: S,
    back: S,
) -> Result<Direction<S>> {
    let n = dec.dim();
    let mut lp = LinearProgram::new(3 * n);
    dec.general().add_to_program(&mut lp, 0);
    dec.down().add_to_program(&mut lp, n);
    for j in 0..n {
        lp.set_bounds(2 * n + j, S::zero(), z[j].max(S::zero()));
        // b_j <= (1 - z_j)(1 - a_j)
        let free = S::one() - z[j];
        let mut coeffs = vec![(n + j, S::one())];
        if free != S::zero() {
            coeffs.push((j, free));
        }
        lp.add_row(coeffs, RowKind::Le, free);
    }
    let mut c = vec![S::zero(); 3 * n];
    for j in 0..n {
        c[j] = front * gw[j] * (S::one() - z[j]);
        let up = front * gw[j] * (S::one() - y[j]) + back * gz[j];
        c[n + j] = up;
        c[2 * n + j] = -up;
    }
    lp.set_objective(c)?;
    let sol = lp.maximize()?;
    Ok(Direction {
        a: sol.x[..n].to_vec(),
        b: sol.x[n..2 * n].to_vec(),
        c: Some(sol.x[2 * n..].to_vec()),
        lp_value: sol.objective,
    })
}

fn empirical_phase_two<S: Scalar>(
    dec: &Decomposition<S>,
    y: &[S],
    z: &[S],
    gw: &[S],
) -> Result<Direction<S>> {
    let n = dec.dim();
    let mut lp = LinearProgram::new(2 * n);
    dec.down().add_to_program(&mut lp, 0);
    let mut c = vec![S::zero(); 2 * n];
    for j in 0..n {
        let (lo, hi) = lp.bounds(j);
        lp.set_bounds(j, lo, hi.min((S::one() - z[j]).max(S::zero())));
        lp.set_bounds(n + j, S::zero(), z[j].max(S::zero()));
        let up = gw[j] * (S::one() - y[j]);
        c[j] = up;
        c[n + j] = -up;
    }
    lp.set_objective(c)?;
    let sol = lp.maximize()?;
    Ok(Direction {
        a: y.to_vec(),
        b: sol.x[..n].to_vec(),
        c: Some(sol.x[n..].to_vec()),
        lp_value: sol.objective,
    })
}

/// Records the potential
/// `φ(i) = e^{2(εi - t_s)} F(y ⊕ z) + (1-m)(1-ε) e^{εi - 2t_s} (t_s - εi) F(z)`
/// over phase one and flags every step with
/// `φ(i) < φ(i-1) - 25 ε² β D² / (1-m) - 15 ε² φ(i-1)`.
fn potential_diagnostics<S: Scalar, F: Objective<S> + ?Sized>(
    trace: &mut Trace<S>,
    obj: &F,
    dec: &Decomposition<S>,
    switch: usize,
) -> Result<()> {
    let m = trace.m;
    if m >= S::one() {
        return Ok(());
    }
    let eps = trace.epsilon;
    let t_s = trace.t_s;
    let two = S::of(2.0);
    let phi: Vec<S> = trace.records[..=switch]
        .iter()
        .map(|r| {
            let tau = eps * S::of(r.i as f64);
            (two * (tau - t_s)).exp() * r.f_w
                + (S::one() - m) * (S::one() - eps) * (tau - two * t_s).exp() * (t_s - tau) * r.f_z
        })
        .collect();
    let d = dec.diameter_upper()?;
    let smooth = S::of(25.0) * eps * eps * obj.beta() * d * d / (S::one() - m);
    for i in 1..phi.len() {
        let allowed = phi[i - 1] - smooth - S::of(15.0) * eps * eps * phi[i - 1];
        let gap = allowed - phi[i];
        if gap > S::algebra_tol() * (S::one() + phi[i - 1].abs()) {
            trace.flag(i, InvariantKind::Potential, gap);
        }
    }
    trace.potential = phi;
    Ok(())
}
