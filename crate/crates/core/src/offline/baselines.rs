//! Published Frank-Wolfe baselines the hybrids are compared against.

use crate::error::{check_dim, Result};
use crate::objectives::Objective;
use crate::offline::snap_steps;
use crate::offline::trace::{audit_norms, Direction, InvariantKind, IterateRecord, Trace, Variant, MEMBERSHIP_TOL};
use crate::polytope::{Decomposition, HPolytope, LinearProgram};
use crate::scalar::Scalar;

/// Non-monotone Frank-Wolfe over a down-closed body: from `z = 0`, move
/// `z ← z + ε b` with `b = argmax {⟨∇F(z), b⟩ : b ∈ D, b <= 1 - z}`.
/// Returns the final iterate.
pub fn run_fw_downclosed<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    down: &HPolytope<S>,
    epsilon: S,
) -> Result<Trace<S>> {
    let n = down.dim();
    check_dim(n, obj.dim())?;
    let steps = snap_steps(epsilon.to_f64_lossy())?;
    let eps = S::one() / S::of(steps as f64);
    let tol = S::of(MEMBERSHIP_TOL).max(S::feas_tol());
    let mut trace = Trace::new(Variant::FwDown, eps, S::zero(), S::zero());
    let zeros = vec![S::zero(); n];
    let mut z = vec![S::zero(); n];
    let mut direction = None;

    for i in 0..=steps {
        if i > 0 {
            let g = obj.gradient(&z)?;
            let mut lp = LinearProgram::new(n);
            down.add_to_program(&mut lp, 0);
            for j in 0..n {
                let (lo, hi) = lp.bounds(j);
                lp.set_bounds(j, lo, hi.min((S::one() - z[j]).max(S::zero())));
            }
            lp.set_objective(g)?;
            let sol = lp.maximize()?;
            for j in 0..n {
                z[j] += eps * sol.x[j];
            }
            direction = Some(Direction {
                a: zeros.clone(),
                b: sol.x,
                c: None,
                lp_value: sol.objective,
            });
        }
        let rz = down.residual_scaled(&z, eps * S::of(i as f64));
        if rz > tol {
            trace.flag(i, InvariantKind::ZMembership, rz);
        }
        audit_norms(&mut trace, i, &z, &z);
        let f = obj.value(&z)?;
        trace.records.push(IterateRecord {
            i,
            y: zeros.clone(),
            z: z.clone(),
            w: z.clone(),
            f_w: f,
            f_z: f,
            direction: direction.take(),
        });
    }
    trace.finish(steps, steps);
    Ok(trace)
}

/// Frank-Wolfe over `K = (N + D) ∩ [0,1]^n` treated as one body: from a
/// minimum `ℓ∞`-norm point, `x ← (1 - ε') x + ε' v` with
/// `v = argmax_{v ∈ K} ⟨∇F(x), v⟩` and `ε' = ε ln 2`, for `1/ε` steps.
///
/// `K` is handled in lifted form, so the trace stores the parts `y ∈ N`,
/// `z ∈ D` with `w = y + z`.
pub fn run_fw_general<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    epsilon: S,
) -> Result<Trace<S>> {
    let n = dec.dim();
    check_dim(n, obj.dim())?;
    let steps = snap_steps(epsilon.to_f64_lossy())?;
    let eps = S::one() / S::of(steps as f64);
    let step = eps * S::LN_2();
    let tol = S::of(MEMBERSHIP_TOL).max(S::feas_tol());
    let mut trace = Trace::new(Variant::FwGeneral, eps, S::zero(), dec.m());
    let (mut y, mut z, _) = dec.min_linf_lifted()?;
    let mut direction = None;

    for i in 0..=steps {
        if i > 0 {
            let x: Vec<S> = y.iter().zip(&z).map(|(&a, &b)| a + b).collect();
            let g = obj.gradient(&x)?;
            let (va, vb, val) = dec.maximize_linear(&g)?;
            for j in 0..n {
                y[j] = (S::one() - step) * y[j] + step * va[j];
                z[j] = (S::one() - step) * z[j] + step * vb[j];
            }
            direction = Some(Direction {
                a: va,
                b: vb,
                c: None,
                lp_value: val,
            });
        }
        let x: Vec<S> = y.iter().zip(&z).map(|(&a, &b)| a + b).collect();
        let ry = dec.general().residual(&y);
        if ry > tol {
            trace.flag(i, InvariantKind::YMembership, ry);
        }
        let rz = dec.down().residual(&z);
        if rz > tol {
            trace.flag(i, InvariantKind::ZMembership, rz);
        }
        let rw = x
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(-v).max(v - S::one()));
        if rw > tol {
            trace.flag(i, InvariantKind::WMembership, rw);
        }
        let f_w = obj.value(&x)?;
        let f_z = obj.value(&z)?;
        trace.records.push(IterateRecord {
            i,
            y: y.clone(),
            z: z.clone(),
            w: x,
            f_w,
            f_z,
            direction: direction.take(),
        });
    }
    trace.finish(steps, steps);
    Ok(trace)
}
