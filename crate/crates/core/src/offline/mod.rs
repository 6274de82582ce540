//! Offline solvers: the hybrid procedures, the Frank-Wolfe baselines, the
//! closed-form guarantee, and reference-optimum estimators.

mod baselines;
mod bound;
mod hybrid;
mod reference;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::polytope::Decomposition;
use crate::scalar::Scalar;

pub use baselines::{run_fw_downclosed, run_fw_general};
pub use bound::{theorem1_bound, theorem1_value, BoundOptimum};
pub use hybrid::{run_alg1, run_alg2, run_alg2_grid, run_alg3, run_alg3_grid};
pub use reference::{grid_opt, in_body, reference_opt, AscentOptions, OptSource, ReferenceOpt, MAX_GRID_POINTS};
pub use trace::{
    BestIterate, Direction, InvariantKind, InvariantViolation, IterateRecord, Trace, TraceSummary, Variant,
};

/// Fewest iterations the guess-free hybrids run (`ε <= 1/30`).
pub const MIN_HYBRID_STEPS: usize = 30;

fn steps_for(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Argument(format!("ε = {epsilon} outside (0,1]")));
    }
    // guard against 1/0.01 landing a hair above 100
    let k = ((1.0 / epsilon) * (1.0 - 1e-12)).ceil();
    if k > 1e7 {
        return Err(Error::Guard(format!("ε = {epsilon} asks for more than 1e7 iterations")));
    }
    Ok((k as usize).max(1))
}

/// Number of iterations `⌈1/ε⌉`; the effective step is its reciprocal.
pub fn snap_steps(epsilon: f64) -> Result<usize> {
    steps_for(epsilon)
}

/// Iteration count of the guess-free hybrids: `max(30, ⌈1/ε⌉)`.
pub fn snap_hybrid_steps(epsilon: f64) -> Result<usize> {
    Ok(steps_for(epsilon)?.max(MIN_HYBRID_STEPS))
}

/// Index of the switching time on the grid of `steps` points:
/// `⌊t_s · steps⌋`, so `t_s` moves down by less than one step.
pub fn snap_switch(t_s: f64, steps: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&t_s) {
        return Err(Error::Argument(format!("t_s = {t_s} outside [0,1]")));
    }
    let k = (t_s * steps as f64 + 1e-9).floor() as usize;
    Ok(k.min(steps))
}

/// Parameters of one offline run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineConfig {
    pub variant: Variant,
    pub epsilon: f64,
    /// Switching time for the guess-free hybrids; `None` runs the whole grid.
    #[serde(default)]
    pub t_s: Option<f64>,
    /// Comparator value required by [`Variant::Alg1`].
    #[serde(default)]
    pub known_p1_value: Option<f64>,
}

impl OfflineConfig {
    pub fn new(variant: Variant, epsilon: f64) -> Self {
        OfflineConfig {
            variant,
            epsilon,
            t_s: None,
            known_p1_value: None,
        }
    }

    /// `(ε, t_s)` after snapping, as the run will use them.
    pub fn effective(&self) -> Result<(f64, Option<f64>)> {
        match self.variant {
            Variant::Alg2 | Variant::Alg3 => {
                let k = snap_hybrid_steps(self.epsilon)?;
                let t = self
                    .t_s
                    .map(|t| snap_switch(t, k).map(|s| s as f64 / k as f64))
                    .transpose()?;
                Ok((1.0 / k as f64, t))
            }
            _ => Ok((1.0 / snap_steps(self.epsilon)? as f64, None)),
        }
    }
}

/// Dispatches one configured run.
pub fn run_offline<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    dec: &Decomposition<S>,
    cfg: &OfflineConfig,
) -> Result<Trace<S>> {
    let eps = S::of(cfg.epsilon);
    match cfg.variant {
        Variant::Alg1 => {
            let v = cfg
                .known_p1_value
                .ok_or_else(|| Error::Argument("alg1 needs known_p1_value".into()))?;
            run_alg1(obj, dec, eps, S::of(v))
        }
        Variant::Alg2 => match cfg.t_s {
            Some(t) => run_alg2(obj, dec, eps, S::of(t)),
            None => run_alg2_grid(obj, dec, eps).map(|(t, _)| t),
        },
        Variant::Alg3 => match cfg.t_s {
            Some(t) => run_alg3(obj, dec, eps, S::of(t)),
            None => run_alg3_grid(obj, dec, eps).map(|(t, _)| t),
        },
        Variant::FwDown => run_fw_downclosed(obj, dec.down(), eps),
        Variant::FwGeneral => run_fw_general(obj, dec, eps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping() {
        assert_eq!(snap_steps(0.25).unwrap(), 4);
        assert_eq!(snap_steps(0.3).unwrap(), 4);
        assert_eq!(snap_steps(0.01).unwrap(), 100);
        assert_eq!(snap_hybrid_steps(0.05).unwrap(), 30);
        assert_eq!(snap_hybrid_steps(0.01).unwrap(), 100);
        assert_eq!(snap_switch(0.3, 30).unwrap(), 9);
        assert_eq!(snap_switch(0.31, 30).unwrap(), 9);
        assert_eq!(snap_switch(1.0, 30).unwrap(), 30);
        assert!(snap_steps(0.0).is_err());
        assert!(snap_switch(1.5, 10).is_err());
        let cfg = OfflineConfig {
            t_s: Some(0.5),
            ..OfflineConfig::new(Variant::Alg2, 0.05)
        };
        let (e, t) = cfg.effective().unwrap();
        assert!((e - 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(t, Some(0.5));
    }
}
