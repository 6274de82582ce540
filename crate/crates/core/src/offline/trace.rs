use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::polytope::Decomposition;
use crate::scalar::Scalar;
use crate::vecmath::linf_norm;

/// Which offline procedure produced a [`Trace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Hybrid with a known value of the down-closed comparator.
    Alg1,
    /// Guess-free hybrid with switching time `t_s`.
    Alg2,
    /// Guess-free hybrid with the empirical improvements.
    Alg3,
    /// Non-monotone Frank-Wolfe over a down-closed body.
    FwDown,
    /// Frank-Wolfe from the minimum-norm point of a general body.
    FwGeneral,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Alg1,
        Variant::Alg2,
        Variant::Alg3,
        Variant::FwDown,
        Variant::FwGeneral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Alg1 => "alg1",
            Variant::Alg2 => "alg2",
            Variant::Alg3 => "alg3",
            Variant::FwDown => "fw_down",
            Variant::FwGeneral => "fw_general",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Directions chosen by the linear program of one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction<S> {
    pub a: Vec<S>,
    pub b: Vec<S>,
    /// Decrease direction (only the empirical variant uses one).
    pub c: Option<Vec<S>>,
    pub lp_value: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateRecord<S> {
    pub i: usize,
    pub y: Vec<S>,
    pub z: Vec<S>,
    /// The candidate output: `y ⊕ z` for the hybrids, `y + z` for the
    /// lifted general baseline, `z` for the down-closed baseline.
    pub w: Vec<S>,
    pub f_w: S,
    pub f_z: S,
    /// `None` at `i = 0`.
    pub direction: Option<Direction<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestIterate<S> {
    pub index: usize,
    pub point: Vec<S>,
    pub value: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    /// `y ∉ N`.
    YMembership,
    /// `z ∉ εi·D` (or `z ∉ D` for the lifted baseline).
    ZMembership,
    /// No valid decomposition witness for `w`.
    WMembership,
    /// `‖z‖_∞ > 1 - (1-ε)^i`.
    ZNorm,
    /// `‖w‖_∞ > 1 - (1-ε)^i (1-m)`.
    WNorm,
    /// Growth constraint of the known-value variant violated post hoc.
    Growth,
    /// Potential decreased by more than the admissible slack.
    Potential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantViolation {
    pub i: usize,
    pub kind: InvariantKind,
    pub excess: f64,
}

/// Per-iteration history of an offline run plus its returned point.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace<S> {
    pub variant: Variant,
    pub epsilon: S,
    pub t_s: S,
    pub m: S,
    pub records: Vec<IterateRecord<S>>,
    /// Smallest iteration index the procedure may return.
    pub first_admissible: usize,
    /// Largest iteration index the procedure may return.
    pub last_admissible: usize,
    pub best: BestIterate<S>,
    pub invariant_violations: Vec<InvariantViolation>,
    /// Potential values for the guess-free hybrid (phase one and its start).
    pub potential: Vec<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub variant: Variant,
    pub seed: u64,
    pub epsilon: f64,
    pub t_s: f64,
    pub best_value: f64,
    pub best_index: usize,
    pub final_value: f64,
    pub iterations: usize,
    pub invariant_violations: usize,
}

pub(crate) const MEMBERSHIP_TOL: f64 = 1e-8;
pub(crate) const NORM_TOL: f64 = 1e-9;

impl<S: Scalar> Trace<S> {
    pub(crate) fn new(variant: Variant, epsilon: S, t_s: S, m: S) -> Self {
        Trace {
            variant,
            epsilon,
            t_s,
            m,
            records: Vec::new(),
            first_admissible: 0,
            last_admissible: 0,
            best: BestIterate {
                index: 0,
                point: Vec::new(),
                value: S::neg_infinity(),
            },
            invariant_violations: Vec::new(),
            potential: Vec::new(),
        }
    }

    /// Picks the best admissible record; call once all records are in.
    pub(crate) fn finish(&mut self, first: usize, last: usize) {
        self.first_admissible = first;
        self.last_admissible = last;
        let mut best: Option<&IterateRecord<S>> = None;
        for r in &self.records[first..=last] {
            if best.is_none_or(|b| r.f_w > b.f_w) {
                best = Some(r);
            }
        }
        let r = best.expect("admissible range is nonempty");
        self.best = BestIterate {
            index: r.i,
            point: r.w.clone(),
            value: r.f_w,
        };
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_record(&self) -> &IterateRecord<S> {
        self.records.last().expect("a trace holds at least the initial record")
    }

    /// Best admissible value among iterations `0..=i`, `None` before the
    /// admissible range starts.
    pub fn best_so_far(&self, i: usize) -> Option<S> {
        if i < self.first_admissible {
            return None;
        }
        let hi = i.min(self.last_admissible);
        self.records[self.first_admissible..=hi]
            .iter()
            .map(|r| r.f_w)
            .reduce(S::max)
    }

    pub(crate) fn flag(&mut self, i: usize, kind: InvariantKind, excess: S) {
        self.invariant_violations.push(InvariantViolation {
            i,
            kind,
            excess: excess.to_f64_lossy(),
        });
    }

    /// CSV with header `variant,seed,eps,t_s,i,F_w,F_z,best_so_far`.
    pub fn to_csv(&self, seed: u64) -> String {
        let mut out = String::from("variant,seed,eps,t_s,i,F_w,F_z,best_so_far\n");
        let mut running: Option<S> = None;
        for r in &self.records {
            if r.i >= self.first_admissible && r.i <= self.last_admissible {
                running = Some(running.map_or(r.f_w, |v| v.max(r.f_w)));
            }
            let best = running.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.variant, seed, self.epsilon, self.t_s, r.i, r.f_w, r.f_z, best
            );
        }
        out
    }

    pub fn summary(&self, seed: u64) -> TraceSummary {
        TraceSummary {
            variant: self.variant,
            seed,
            epsilon: self.epsilon.to_f64_lossy(),
            t_s: self.t_s.to_f64_lossy(),
            best_value: self.best.value.to_f64_lossy(),
            best_index: self.best.index,
            final_value: self.final_record().f_w.to_f64_lossy(),
            iterations: self.iterations(),
            invariant_violations: self.invariant_violations.len(),
        }
    }
}

/// Cheap membership and norm checks for the hybrids, by decomposition witness:
/// `y ∈ N`, `z ∈ εi·D`, `(1-y) ⊙ z ∈ D` (which puts `y ⊕ z` in `N + D`).
pub(crate) fn audit_hybrid<S: Scalar>(
    trace: &mut Trace<S>,
    dec: &Decomposition<S>,
    i: usize,
    y: &[S],
    z: &[S],
    w: &[S],
) {
    let tol = S::of(MEMBERSHIP_TOL).max(S::feas_tol());
    let eps = trace.epsilon;
    let scale = eps * S::of(i as f64);
    let ry = dec.general().residual(y);
    if ry > tol {
        trace.flag(i, InvariantKind::YMembership, ry);
    }
    let rz = dec.down().residual_scaled(z, scale);
    if rz > tol {
        trace.flag(i, InvariantKind::ZMembership, rz);
    }
    let rw = dec.witness_residual(y, z);
    let box_w = w
        .iter()
        .fold(S::zero(), |acc, &v| acc.max(-v).max(v - S::one()));
    if rw.max(box_w) > tol {
        trace.flag(i, InvariantKind::WMembership, rw.max(box_w));
    }
    audit_norms(trace, i, z, w);
}

pub(crate) fn audit_norms<S: Scalar>(trace: &mut Trace<S>, i: usize, z: &[S], w: &[S]) {
    let ntol = S::of(NORM_TOL).max(S::feas_tol());
    let decay = (S::one() - trace.epsilon).powi(i as i32);
    let zn = linf_norm(z) - (S::one() - decay);
    if zn > ntol {
        trace.flag(i, InvariantKind::ZNorm, zn);
    }
    let wn = linf_norm(w) - (S::one() - decay * (S::one() - trace.m));
    if wn > ntol {
        trace.flag(i, InvariantKind::WNorm, wn);
    }
}
