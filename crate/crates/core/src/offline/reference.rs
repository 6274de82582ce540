//! Estimates of the optimum used to report approximation ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::polytope::{Decomposition, HPolytope, ProjectionOptions};
use crate::scalar::Scalar;

/// Largest number of grid points [`grid_opt`] will evaluate.
pub const MAX_GRID_POINTS: usize = 1_000_000;

/// Where a reference optimum came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptSource {
    Grid,
    Candidate,
    GradientAscent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceOpt<S> {
    pub value: S,
    pub point: Vec<S>,
    pub source: OptSource,
}

/// Membership of `x` in `(N + D) ∩ [0,1]^n`, via the LP residual.
pub fn in_body<S: Scalar>(dec: &Decomposition<S>, x: &[S]) -> Result<bool> {
    Ok(dec.membership_residual(x)? <= S::feas_tol())
}

/// Best value over the points of `{0, h, 2h, ..., 1}^n` that lie in the body.
pub fn grid_opt<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    step: S,
) -> Result<ReferenceOpt<S>> {
    let n = dec.dim();
    check_dim(n, obj.dim())?;
    if !(step > S::zero() && step <= S::one()) {
        return Err(Error::Argument(format!("grid step {step} outside (0,1]")));
    }
    let per_axis = (S::one() / step).round().to_usize().unwrap_or(usize::MAX) + 1;
    let total = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(per_axis));
    if total.is_none_or(|t| t > MAX_GRID_POINTS) {
        return Err(Error::Guard(format!(
            "grid of {per_axis}^{n} points exceeds {MAX_GRID_POINTS}"
        )));
    }
    let coord = |k: usize| (S::of(k as f64) * step).min(S::one());
    let mut idx = vec![0usize; n];
    let mut best = ReferenceOpt {
        value: S::neg_infinity(),
        point: Vec::new(),
        source: OptSource::Grid,
    };
    let mut x = vec![S::zero(); n];
    loop {
        for j in 0..n {
            x[j] = coord(idx[j]);
        }
        if in_body(dec, &x)? {
            let v = obj.value(&x)?;
            if v > best.value {
                best.value = v;
                best.point = x.clone();
            }
        }
        let mut j = 0;
        while j < n {
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
    }
    if best.point.is_empty() {
        return Err(Error::Infeasible {
            row: None,
            detail: "no grid point lies in the body".into(),
        });
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AscentOptions {
    pub starts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            starts: 50,
            max_iters: 200,
            seed: 0,
        }
    }
}

/// Reference optimum: the best of the supplied candidate points (typically
/// algorithm outputs) and of projected gradient ascent started from every
/// candidate and from `opts.starts` random feasible points.
///
/// When `N = {0}` the ascent runs in `D` directly; otherwise it runs on the
/// lifted body `{(a, b) : a ∈ N, b ∈ D, a + b <= 1}` with `x = a + b`.
pub fn reference_opt<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    candidates: &[Vec<S>],
    opts: AscentOptions,
) -> Result<ReferenceOpt<S>> {
    let n = dec.dim();
    check_dim(n, obj.dim())?;
    let mut best = ReferenceOpt {
        value: S::neg_infinity(),
        point: Vec::new(),
        source: OptSource::Candidate,
    };
    for c in candidates {
        check_dim(n, c.len())?;
        let v = obj.value(c)?;
        if v > best.value {
            best = ReferenceOpt {
                value: v,
                point: c.clone(),
                source: OptSource::Candidate,
            };
        }
    }

    let origin_only = dec.general().maximize_linear(&vec![S::one(); n])?.objective <= S::feas_tol();
    let body: HPolytope<S> = if origin_only {
        dec.down().clone()
    } else {
        dec.joint_polytope()
    };
    let lifted = !origin_only;
    let dim = body.dim();
    let fold = |u: &[S]| -> Vec<S> {
        if lifted {
            (0..n).map(|j| u[j] + u[n + j]).collect()
        } else {
            u.to_vec()
        }
    };

    let mut starts: Vec<Vec<S>> = Vec::new();
    for c in candidates {
        // lift a candidate by projecting (c, 0) or c itself
        let mut u = c.clone();
        if lifted {
            u.extend(std::iter::repeat_n(S::zero(), n));
        }
        starts.push(u);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        let c: Vec<S> = (0..dim).map(|_| S::of(rng.random_range(-1.0..1.0))).collect();
        let vertex = body.maximize_linear(&c)?.x;
        let shrink = S::of(rng.random::<f64>());
        let anchor = if lifted {
            let mut a = dec.y0().to_vec();
            a.extend(std::iter::repeat_n(S::zero(), n));
            a
        } else {
            vec![S::zero(); n]
        };
        starts.push(
            vertex
                .iter()
                .zip(&anchor)
                .map(|(&v, &a)| a + shrink * (v - a))
                .collect(),
        );
    }

    let beta = obj.beta();
    let eta = if beta > S::zero() { S::one() / beta } else { S::one() };
    let proj_opts = ProjectionOptions {
        max_iters: 2_000,
        feasibility_tol: 1e-9,
        step_tol: 1e-11,
    };
    for start in starts {
        let Ok(mut u) = body.project_with(&start, proj_opts).map(|p| p.into_vec()) else {
            continue;
        };
        let mut value = obj.value(&fold(&u))?;
        for _ in 0..opts.max_iters {
            let g = obj.gradient(&fold(&u))?;
            let step: Vec<S> = (0..dim).map(|k| u[k] + eta * g[k % n]).collect();
            let Ok(next) = body.project_with(&step, proj_opts) else {
                break;
            };
            let next = next.into_vec();
            let moved = next
                .iter()
                .zip(&u)
                .fold(S::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
            let v = obj.value(&fold(&next))?;
            u = next;
            value = v;
            if moved <= S::of(1e-10) {
                break;
            }
        }
        if value > best.value && body.residual(&u) <= S::feas_tol() {
            best = ReferenceOpt {
                value,
                point: fold(&u),
                source: OptSource::GradientAscent,
            };
        }
    }
    if best.point.is_empty() {
        return Err(Error::Solver("no reference point could be evaluated".into()));
    }
    Ok(best)
}
