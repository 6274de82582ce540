//! The online hybrid: one linear optimizer per stage of the offline
//! recursion, each fed the gradient-shaped vector its stage would have
//! maximized.

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::offline::{snap_steps, snap_switch};
use crate::online::olo::FtrlOptimizer;
use crate::polytope::Decomposition;
use crate::scalar::Scalar;
use crate::vecmath::{linf_norm, psum_slices, Point};

/// Tolerance of the per-stage membership and norm audits.
pub const STAGE_TOL: f64 = 1e-8;

/// Counts of failed per-stage checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageAudit {
    pub checks: usize,
    pub violations: usize,
    pub worst: f64,
}

impl StageAudit {
    fn record(&mut self, excess: f64) {
        self.checks += 1;
        if excess > STAGE_TOL {
            self.violations += 1;
            self.worst = self.worst.max(excess);
        }
    }
}

/// Iterates of one round, kept until its feedback arrives.
#[derive(Clone, Debug)]
pub struct StageIterates<S> {
    /// `y⁽ⁱ⁾` for `i = 0..=steps`.
    pub y: Vec<Vec<S>>,
    /// `z⁽ⁱ⁾` for `i = 0..=steps`.
    pub z: Vec<Vec<S>>,
}

/// State of the online hybrid for one switching time.
#[derive(Clone, Debug)]
pub struct OnlineHybridState<S> {
    dec: Decomposition<S>,
    eps: S,
    steps: usize,
    switch: usize,
    optimizers: Vec<FtrlOptimizer<S>>,
    stages: Option<StageIterates<S>>,
    pending: bool,
    last_feedback: Vec<Vec<S>>,
    audit: StageAudit,
    rounds: usize,
}

impl<S: Scalar> OnlineHybridState<S> {
    /// `grad_bound` must bound `‖∇F_ℓ(x)‖₂` over the box for every function
    /// of the stream; the optimizer of each stage scales it by the weights
    /// its feedback vectors carry.
    pub fn new(
        dec: &Decomposition<S>,
        epsilon: S,
        t_s: S,
        horizon: usize,
        grad_bound: S,
    ) -> Result<Self> {
        let steps = snap_steps(epsilon.to_f64_lossy())?;
        let switch = snap_switch(t_s.to_f64_lossy(), steps)?;
        Self::with_grid(dec, steps, switch, horizon, grad_bound)
    }

    /// `ε = 1/steps`, `t_s = switch/steps`.
    pub fn with_grid(
        dec: &Decomposition<S>,
        steps: usize,
        switch: usize,
        horizon: usize,
        grad_bound: S,
    ) -> Result<Self> {
        if steps == 0 || switch > steps {
            return Err(Error::Argument(format!(
                "switch index {switch} outside 0..={steps}"
            )));
        }
        let n = dec.dim();
        let eps = S::one() / S::of(steps as f64);
        let t_s = S::of(switch as f64) * eps;
        let m = dec.m();
        let body = dec.joint_polytope();
        let diameter = dec.joint_diameter_upper()?;
        let mut anchor = dec.y0().to_vec();
        anchor.resize(2 * n, S::zero());

        let mut optimizers = Vec::with_capacity(steps);
        for i in 1..=steps {
            let bound = if i <= switch {
                let tau = eps * S::of(i as f64);
                let front = (tau + tau).exp();
                let back = (S::one() - m) * tau.exp() * (t_s - tau);
                grad_bound * (front * front + (front + back) * (front + back)).sqrt()
            } else {
                grad_bound
            };
            optimizers.push(FtrlOptimizer::new(
                &body,
                anchor.clone(),
                diameter,
                bound.max(S::min_positive_value()),
                horizon,
            )?);
        }
        Ok(OnlineHybridState {
            dec: dec.clone(),
            eps,
            steps,
            switch,
            optimizers,
            stages: None,
            pending: false,
            last_feedback: Vec::new(),
            audit: StageAudit::default(),
            rounds: 0,
        })
    }

    pub fn epsilon(&self) -> S {
        self.eps
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_s(&self) -> S {
        S::of(self.switch as f64) * self.eps
    }

    pub fn audit(&self) -> &StageAudit {
        &self.audit
    }

    /// Iterates of the latest round.
    pub fn stages(&self) -> Option<&StageIterates<S>> {
        self.stages.as_ref()
    }

    /// Vectors passed to the stage optimizers in the latest feedback.
    pub fn last_feedback(&self) -> &[Vec<S>] {
        &self.last_feedback
    }

    pub fn optimizers(&self) -> &[FtrlOptimizer<S>] {
        &self.optimizers
    }

    /// Runs the recursion of one round and returns `y ⊕ z` after the last stage.
    pub fn step(&mut self) -> Result<Point<S>> {
        if self.pending {
            return Err(Error::Protocol(format!(
                "round {} started before feedback for round {}",
                self.rounds + 2,
                self.rounds + 1
            )));
        }
        let n = self.dec.dim();
        let eps = self.eps;
        let m = self.dec.m();
        let mut y = self.dec.y0().to_vec();
        let mut z = vec![S::zero(); n];
        let mut ys = Vec::with_capacity(self.steps + 1);
        let mut zs = Vec::with_capacity(self.steps + 1);
        ys.push(y.clone());
        zs.push(z.clone());

        for i in 1..=self.steps {
            let u = self.optimizers[i - 1].next()?;
            let (a, b) = u.split_at(n);
            if i <= self.switch {
                for j in 0..n {
                    y[j] = (S::one() - eps) * y[j] + eps * a[j];
                }
            }
            for j in 0..n {
                let grow = eps * (S::one() - z[j]) * b[j];
                z[j] += grow;
            }

            let scale = eps * S::of(i as f64);
            self.audit.record(self.dec.general().residual(&y).to_f64_lossy());
            self.audit.record(self.dec.down().residual_scaled(&z, scale).to_f64_lossy());
            let decay = (S::one() - eps).powi(i as i32);
            let w = psum_slices(&y, &z);
            self.audit
                .record((linf_norm(&z) - (S::one() - decay)).to_f64_lossy());
            self.audit
                .record((linf_norm(&w) - (S::one() - decay * (S::one() - m))).to_f64_lossy());

            ys.push(y.clone());
            zs.push(z.clone());
        }
        let w = Point::clamped(psum_slices(&y, &z))?;
        self.stages = Some(StageIterates { y: ys, z: zs });
        self.pending = true;
        Ok(w)
    }

    /// Residual of the witness `y ⊕ z = y + (1-y) ⊙ z` of the latest output.
    pub fn output_residual(&self) -> Option<S> {
        let st = self.stages.as_ref()?;
        let y = st.y.last()?;
        let z = st.z.last()?;
        let w = psum_slices(y, z);
        let box_w = w
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(-v).max(v - S::one()));
        Some(self.dec.witness_residual(y, z).max(box_w))
    }

    /// Reveals the function of the round and feeds every stage optimizer.
    pub fn feedback<F: Objective<S> + ?Sized>(&mut self, f: &F) -> Result<()> {
        if !self.pending {
            return Err(Error::Protocol(format!(
                "feedback for round {} without a pending output",
                self.rounds + 1
            )));
        }
        let st = self
            .stages
            .as_ref()
            .ok_or_else(|| Error::Protocol("no stored iterates for this round".into()))?;
        let n = self.dec.dim();
        crate::error::check_dim(n, f.dim())?;
        let eps = self.eps;
        let m = self.dec.m();
        let t_s = self.t_s();
        let mut fed = Vec::with_capacity(self.steps);

        for i in 1..=self.steps {
            let y = &st.y[i - 1];
            let z = &st.z[i - 1];
            let gw = f.gradient(&psum_slices(y, z))?;
            let mut g = vec![S::zero(); 2 * n];
            if i <= self.switch {
                let gz = f.gradient(z)?;
                let tau = eps * S::of(i as f64);
                let front = (tau + tau).exp();
                let back = (S::one() - m) * tau.exp() * (t_s - tau);
                for j in 0..n {
                    let base = front * gw[j] * (S::one() - z[j]);
                    g[j] = base;
                    g[n + j] = base * (S::one() - y[j]) + back * gz[j] * (S::one() - z[j]);
                }
            } else {
                for j in 0..n {
                    g[n + j] = gw[j] * (S::one() - z[j]) * (S::one() - y[j]);
                }
            }
            self.optimizers[i - 1].feed(&g)?;
            fed.push(g);
        }
        self.last_feedback = fed;
        self.pending = false;
        self.rounds += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::QuadraticObjective;
    use crate::polytope::HPolytope;

    fn toy() -> QuadraticObjective<f64> {
        QuadraticObjective::new(2, vec![-1.0, -0.5, -0.5, -1.0], vec![0.8, 0.6], 0.0).unwrap()
    }

    #[test]
    fn single_stage_output() {
        let dec = Decomposition::new(
            HPolytope::<f64>::sum_equal(2, 0.2).unwrap(),
            HPolytope::sum_at_most(2, 0.5).unwrap(),
        )
        .unwrap();
        let mut s = OnlineHybridState::new(&dec, 1.0, 0.0, 10, 2.0).unwrap();
        let w = s.step().unwrap();
        let y0 = dec.y0();
        // first round: the optimizer plays its anchor, so b = 0
        for j in 0..2 {
            assert!((w[j] - y0[j]).abs() < 1e-15);
        }
        s.feedback(&toy()).unwrap();
        let w = s.step().unwrap();
        let st = s.stages().unwrap();
        let b = &st.z[1];
        for j in 0..2 {
            let expect = y0[j] + b[j] - y0[j] * b[j];
            assert!((w[j] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn protocol_alternates() {
        let dec = Decomposition::new(HPolytope::<f64>::origin(2), HPolytope::unit_box(2)).unwrap();
        let mut s = OnlineHybridState::new(&dec, 0.25, 0.5, 10, 2.0).unwrap();
        assert!(matches!(s.feedback(&toy()), Err(Error::Protocol(_))));
        s.step().unwrap();
        assert!(matches!(s.step(), Err(Error::Protocol(_))));
        s.feedback(&toy()).unwrap();
        assert!(matches!(s.feedback(&toy()), Err(Error::Protocol(_))));
    }

    #[test]
    fn zero_switch_has_no_first_half() {
        let dec = Decomposition::new(
            HPolytope::<f64>::sum_equal(2, 0.2).unwrap(),
            HPolytope::sum_at_most(2, 0.5).unwrap(),
        )
        .unwrap();
        let mut s = OnlineHybridState::new(&dec, 0.25, 0.0, 10, 2.0).unwrap();
        for _ in 0..3 {
            s.step().unwrap();
            s.feedback(&toy()).unwrap();
            for g in s.last_feedback() {
                assert!(g[..2].iter().all(|&v| v == 0.0));
            }
        }
        assert_eq!(s.audit().violations, 0);
    }
}
