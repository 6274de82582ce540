use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maximizer of the offline guarantee over the `(t_s, T)` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOptimum<S> {
    pub value: S,
    pub t_s: S,
    pub t: S,
}

/// The offline guarantee at a given `(t_s, T)` with the `O(ε)` terms dropped:
/// `(1-m) [(T - t_s) e^{-T} F_p2 + ½ t_s² e^{-t_s-T} F_p1 + (e^{-T} - e^{-t_s-T}) F_o]`.
///
/// `f_o` is the value at the comparator sum `q + p1` with `q ∈ N`, `p1 ∈ D`;
/// `f_p2` the value at an arbitrary `p2 ∈ D`.
pub fn theorem1_value<S: Scalar>(f_o: S, f_p1: S, f_p2: S, m: S, t_s: S, t: S) -> S {
    let e_t = (-t).exp();
    let e_st = (-t_s - t).exp();
    (S::one() - m)
        * ((t - t_s) * e_t * f_p2 + S::of(0.5) * t_s * t_s * e_st * f_p1 + (e_t - e_st) * f_o)
}

/// Maximizes [`theorem1_value`] over `0 <= t_s <= T <= 1` on a grid of the
/// given step (the endpoint 1 is always included). The dropped error terms
/// are `O(ε)` times each value plus `O(ε β D² / (1-m))`.
pub fn theorem1_bound<S: Scalar>(f_o: S, f_p1: S, f_p2: S, m: S, grid_step: S) -> Result<BoundOptimum<S>> {
    for (name, v) in [("F_o", f_o), ("F_p1", f_p1), ("F_p2", f_p2)] {
        if !(v >= S::zero()) || !v.is_finite() {
            return Err(Error::Argument(format!("{name} = {v} must be finite and >= 0")));
        }
    }
    if !(m >= S::zero() && m < S::one()) {
        return Err(Error::Argument(format!("m = {m} outside [0,1)")));
    }
    if !(grid_step > S::zero() && grid_step <= S::one()) {
        return Err(Error::Argument(format!("grid step {grid_step} outside (0,1]")));
    }
    let k = (S::one() / grid_step).ceil().to_usize().unwrap_or(usize::MAX);
    if k > 100_000 {
        return Err(Error::Guard(format!("grid step {grid_step} gives more than 1e5 points per axis")));
    }
    let at = |idx: usize| (S::of(idx as f64) * grid_step).min(S::one());
    let mut best = BoundOptimum {
        value: S::neg_infinity(),
        t_s: S::zero(),
        t: S::zero(),
    };
    for a in 0..=k {
        let t_s = at(a);
        for b in a..=k {
            let t = at(b);
            let v = theorem1_value(f_o, f_p1, f_p2, m, t_s, t);
            if v > best.value {
                best = BoundOptimum { value: v, t_s, t };
            }
        }
    }
    Ok(best)
}
