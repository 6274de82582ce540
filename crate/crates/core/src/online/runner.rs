//! Drivers for whole streams: the hybrid at a fixed switching time, the
//! Hedge combination of every grid switching time, and the online
//! Frank-Wolfe baseline.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::offline::snap_steps;
use crate::online::hedge::Hedge;
use crate::online::hybrid::OnlineHybridState;
use crate::online::olo::FtrlOptimizer;
use crate::polytope::Decomposition;
use crate::scalar::Scalar;
use crate::vecmath::l2_norm;

/// How the hybrid is run over a stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OnlineMode {
    /// A single switching time.
    Fixed { t_s: f64 },
    /// Hedge over every switching time of the ε-grid.
    Meta,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineOptions {
    pub epsilon: f64,
    /// Declared bound on `‖∇F_ℓ‖₂` over the box; computed from the stream
    /// when absent (see [`stream_gradient_bound`]).
    #[serde(default)]
    pub grad_bound: Option<f64>,
    /// A fixed point of `K` whose per-step value is recorded for comparison.
    #[serde(default)]
    pub comparator: Option<Vec<f64>>,
}

impl OnlineOptions {
    pub fn new(epsilon: f64) -> Self {
        OnlineOptions {
            epsilon,
            ..Default::default()
        }
    }
}

/// One row of an [`OnlineRun`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnlineStep<S> {
    pub ell: usize,
    /// `F_ℓ` at the played point. In meta mode, at the point of the expert
    /// with the largest weight.
    pub value_raw: S,
    pub value_norm: S,
    /// Running sum of the normalized value the algorithm collects (the
    /// expectation under the played distribution in meta mode).
    pub cum_value: S,
    pub feasibility_residual: S,
    /// Hedge weights before this step's update (meta mode).
    pub expert_weights: Option<Vec<S>>,
    /// `E_{x ~ P_ℓ} F_ℓ(x) / upper_ℓ` (meta mode).
    pub expected_value: Option<S>,
    /// Normalized value of the supplied comparator.
    pub comparator_value: Option<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnlineRun<S> {
    /// `fixed`, `meta` or `baseline`.
    pub mode: String,
    pub t_s: Option<S>,
    pub epsilon: S,
    pub steps: Vec<OnlineStep<S>>,
    /// Failed per-stage membership or norm checks over the run.
    pub stage_violations: usize,
}

impl<S: Scalar> OnlineRun<S> {
    pub fn cumulative_value(&self) -> S {
        self.steps.last().map_or(S::zero(), |s| s.cum_value)
    }

    pub fn max_residual(&self) -> S {
        self.steps
            .iter()
            .fold(S::zero(), |a, s| a.max(s.feasibility_residual))
    }

    /// `ell,mode,t_s,value_raw,value_norm,cum_value,feasibility_residual`,
    /// plus `expert_weights,expected_value` in meta mode and
    /// `comparator_value` when a comparator was supplied.
    pub fn to_csv(&self) -> String {
        let meta = self.steps.iter().any(|s| s.expert_weights.is_some());
        let comp = self.steps.iter().any(|s| s.comparator_value.is_some());
        let mut out = String::from("ell,mode,t_s,value_raw,value_norm,cum_value,feasibility_residual");
        if meta {
            out.push_str(",expert_weights,expected_value");
        }
        if comp {
            out.push_str(",comparator_value");
        }
        out.push('\n');
        let t_s = self.t_s.map(|t| t.to_string()).unwrap_or_default();
        for s in &self.steps {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                s.ell, self.mode, t_s, s.value_raw, s.value_norm, s.cum_value, s.feasibility_residual
            );
            if meta {
                let w = s
                    .expert_weights
                    .as_ref()
                    .map(|w| serde_json::to_string(w).unwrap_or_default())
                    .unwrap_or_default();
                let e = s.expected_value.map(|v| v.to_string()).unwrap_or_default();
                let _ = write!(out, ",\"{}\",{}", w.replace('"', "\"\""), e);
            }
            if comp {
                let c = s.comparator_value.map(|v| v.to_string()).unwrap_or_default();
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// `max_ℓ ‖max(|∇F_ℓ(0)|, |∇F_ℓ(1)|)‖₂`.
///
/// For DR-submodular `F` every partial derivative is antitone, so it lies
/// between its values at `1` and at `0`; the result therefore bounds the
/// gradient norm over the whole box.
pub fn stream_gradient_bound<S: Scalar, F: Objective<S>>(stream: &[F]) -> Result<S> {
    let mut g = S::zero();
    for f in stream {
        let n = f.dim();
        let lo = f.gradient(&vec![S::zero(); n])?;
        let hi = f.gradient(&vec![S::one(); n])?;
        let v: Vec<S> = lo.iter().zip(&hi).map(|(&a, &b)| a.abs().max(b.abs())).collect();
        g = g.max(l2_norm(&v));
    }
    Ok(g)
}

fn normalized<S: Scalar, F: Objective<S> + ?Sized>(f: &F, value: S) -> Result<S> {
    let upper = f.value_upper();
    if !(upper > S::zero()) {
        return Ok(S::zero());
    }
    let r = value / upper;
    if r > S::one() + S::of(1e-9) {
        return Err(Error::Validation(format!(
            "value {value} exceeds the declared upper bound {upper}"
        )));
    }
    Ok(r.max(S::zero()).min(S::one()))
}

struct Prepared<S> {
    grad_bound: S,
    comparator: Option<Vec<S>>,
}

fn prepare<S: Scalar, F: Objective<S>>(
    stream: &[F],
    dec: &Decomposition<S>,
    opts: &OnlineOptions,
) -> Result<Prepared<S>> {
    for f in stream {
        check_dim(dec.dim(), f.dim())?;
    }
    let declared = opts.grad_bound.map(S::of);
    let grad_bound = match declared {
        Some(g) if g > S::zero() && g.is_finite() => g,
        Some(g) => return Err(Error::Argument(format!("gradient bound {g} must be > 0"))),
        None => stream_gradient_bound(stream)?,
    };
    // constant streams still need a positive scale for the step size
    let grad_bound = grad_bound.max(S::of(1e-12));
    let comparator = match &opts.comparator {
        Some(c) => {
            check_dim(dec.dim(), c.len())?;
            let c: Vec<S> = c.iter().map(|&v| S::of(v)).collect();
            let r = dec.membership_residual(&c)?;
            if r > S::of(1e-8) {
                return Err(Error::Argument(format!("comparator lies outside K (residual {r})")));
            }
            Some(c)
        }
        None => None,
    };
    Ok(Prepared {
        grad_bound,
        comparator,
    })
}

/// Runs the online hybrid over `stream`, one round per function.
pub fn run_online_experiment<S: Scalar, F: Objective<S>>(
    stream: &[F],
    dec: &Decomposition<S>,
    opts: &OnlineOptions,
    mode: OnlineMode,
) -> Result<OnlineRun<S>> {
    let steps = snap_steps(opts.epsilon)?;
    let eps = S::one() / S::of(steps as f64);
    let prep = prepare(stream, dec, opts)?;
    let horizon = stream.len().max(1);

    let (switches, label) = match mode {
        OnlineMode::Fixed { t_s } => (vec![crate::offline::snap_switch(t_s, steps)?], "fixed"),
        OnlineMode::Meta => ((0..=steps).collect(), "meta"),
    };
    let mut experts = switches
        .iter()
        .map(|&s| OnlineHybridState::with_grid(dec, steps, s, horizon, prep.grad_bound))
        .collect::<Result<Vec<_>>>()?;
    let mut hedge = match mode {
        OnlineMode::Meta => Some(Hedge::<S>::new(experts.len(), horizon)?),
        OnlineMode::Fixed { .. } => None,
    };

    let mut run = OnlineRun {
        mode: label.to_string(),
        t_s: match mode {
            OnlineMode::Fixed { .. } => Some(experts[0].t_s()),
            OnlineMode::Meta => None,
        },
        epsilon: eps,
        steps: Vec::with_capacity(stream.len()),
        stage_violations: 0,
    };
    let mut cum = S::zero();

    for (ell, f) in stream.iter().enumerate() {
        let weights = hedge.as_mut().map(|h| h.step()).transpose()?;
        let mut raw = Vec::with_capacity(experts.len());
        let mut norm = Vec::with_capacity(experts.len());
        let mut residual = S::zero();
        for e in experts.iter_mut() {
            let w = e.step()?;
            residual = residual.max(e.output_residual().unwrap_or(S::zero()));
            let v = f.value(&w)?;
            norm.push(normalized(f, v)?);
            raw.push(v);
        }
        let (lead, gained, expected) = match &weights {
            Some(w) => {
                let lead = (0..w.len())
                    .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a)))
                    .unwrap_or(0);
                let e: S = w.iter().zip(&norm).map(|(&p, &r)| p * r).sum();
                (lead, e, Some(e))
            }
            None => (0, norm[0], None),
        };
        cum += gained;
        let comparator_value = match &prep.comparator {
            Some(c) => Some(normalized(f, f.value(c)?)?),
            None => None,
        };
        run.steps.push(OnlineStep {
            ell: ell + 1,
            value_raw: raw[lead],
            value_norm: norm[lead],
            cum_value: cum,
            feasibility_residual: residual,
            expert_weights: weights,
            expected_value: expected,
            comparator_value,
        });
        for e in experts.iter_mut() {
            e.feedback(f)?;
        }
        if let Some(h) = hedge.as_mut() {
            h.feedback(&norm)?;
        }
    }
    run.stage_violations = experts.iter().map(|e| e.audit().violations).sum();
    Ok(run)
}

/// Online Frank-Wolfe over `K` itself (in lifted form): `1/ε` optimizers,
/// `x⁽ⁱ⁾ = (1-ε') x⁽ⁱ⁻¹⁾ + ε' v⁽ⁱ⁾` with `ε' = ε ln 2` from a minimum
/// `ℓ∞`-norm point, stage `i` fed `∇F_ℓ(x⁽ⁱ⁻¹⁾)`.
pub fn run_online_baseline<S: Scalar, F: Objective<S>>(
    stream: &[F],
    dec: &Decomposition<S>,
    opts: &OnlineOptions,
) -> Result<OnlineRun<S>> {
    let steps = snap_steps(opts.epsilon)?;
    let eps = S::one() / S::of(steps as f64);
    let step = eps * S::LN_2();
    let prep = prepare(stream, dec, opts)?;
    let horizon = stream.len().max(1);
    let n = dec.dim();

    let body = dec.joint_polytope();
    let diameter = dec.joint_diameter_upper()?;
    let (a0, b0, _) = dec.min_linf_lifted()?;
    let mut anchor = a0.clone();
    anchor.extend_from_slice(&b0);
    // the lifted reward (g, g) has norm √2 ‖g‖
    let bound = prep.grad_bound * S::of(2.0).sqrt();
    let mut optimizers = (0..steps)
        .map(|_| FtrlOptimizer::new(&body, anchor.clone(), diameter, bound, horizon))
        .collect::<Result<Vec<_>>>()?;

    let mut run = OnlineRun {
        mode: "baseline".into(),
        t_s: None,
        epsilon: eps,
        steps: Vec::with_capacity(stream.len()),
        stage_violations: 0,
    };
    let mut cum = S::zero();
    for (ell, f) in stream.iter().enumerate() {
        let mut ya = a0.clone();
        let mut zb = b0.clone();
        let mut xs = Vec::with_capacity(steps + 1);
        xs.push(sum(&ya, &zb));
        for o in optimizers.iter_mut() {
            let v = o.next()?;
            for j in 0..n {
                ya[j] = (S::one() - step) * ya[j] + step * v[j];
                zb[j] = (S::one() - step) * zb[j] + step * v[n + j];
            }
            xs.push(sum(&ya, &zb));
        }
        let x = xs.last().expect("at least the start point");
        let residual = dec
            .general()
            .residual(&ya)
            .max(dec.down().residual(&zb))
            .max(x.iter().fold(S::zero(), |a, &v| a.max(-v).max(v - S::one())));
        let v = f.value(x)?;
        let r = normalized(f, v)?;
        cum += r;
        let comparator_value = match &prep.comparator {
            Some(c) => Some(normalized(f, f.value(c)?)?),
            None => None,
        };
        run.steps.push(OnlineStep {
            ell: ell + 1,
            value_raw: v,
            value_norm: r,
            cum_value: cum,
            feasibility_residual: residual,
            expert_weights: None,
            expected_value: None,
            comparator_value,
        });
        for (i, o) in optimizers.iter_mut().enumerate() {
            let g = f.gradient(&xs[i])?;
            let mut d = g.clone();
            d.extend_from_slice(&g);
            o.feed(&d)?;
        }
    }
    Ok(run)
}

fn sum<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::QuadraticObjective;
    use crate::polytope::HPolytope;

    fn toy() -> QuadraticObjective<f64> {
        QuadraticObjective::new(2, vec![-1.0, -0.5, -0.5, -1.0], vec![0.8, 0.6], 0.1).unwrap()
    }

    #[test]
    fn empty_stream_gives_empty_run() {
        let dec = Decomposition::new(HPolytope::<f64>::origin(2), HPolytope::unit_box(2)).unwrap();
        let stream: Vec<QuadraticObjective<f64>> = Vec::new();
        let run = run_online_experiment(&stream, &dec, &OnlineOptions::new(0.25), OnlineMode::Meta).unwrap();
        assert!(run.steps.is_empty());
        let run = run_online_baseline(&stream, &dec, &OnlineOptions::new(0.25)).unwrap();
        assert!(run.steps.is_empty());
    }

    #[test]
    fn singleton_body_gives_constant_baseline() {
        let pin = HPolytope::new(
            2,
            vec![
                crate::polytope::Halfspace::eq(vec![(0, 1.0)], 0.2),
                crate::polytope::Halfspace::eq(vec![(1, 1.0)], 0.6),
            ],
            false,
        )
        .unwrap();
        let dec = Decomposition::new(pin, HPolytope::origin(2)).unwrap();
        let stream = vec![toy(); 5];
        let run = run_online_baseline(&stream, &dec, &OnlineOptions::new(0.25)).unwrap();
        let v0 = run.steps[0].value_raw;
        assert!(run.steps.iter().all(|s| (s.value_raw - v0).abs() < 1e-12));
    }

    #[test]
    fn csv_columns() {
        let dec = Decomposition::new(HPolytope::<f64>::origin(2), HPolytope::unit_box(2)).unwrap();
        let stream = vec![toy(); 3];
        let run = run_online_experiment(&stream, &dec, &OnlineOptions::new(0.5), OnlineMode::Meta).unwrap();
        let csv = run.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "ell,mode,t_s,value_raw,value_norm,cum_value,feasibility_residual,expert_weights,expected_value"
        );
        assert_eq!(csv.lines().count(), 4);
    }
}
