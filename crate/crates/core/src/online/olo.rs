//! Online linear optimization over a polytope: follow-the-regularized-leader
//! with a quadratic regularizer, i.e. lazy projection of the anchor plus the
//! scaled reward sum.

use crate::error::{check_dim, Error, Result};
use crate::polytope::{HPolytope, ProjectionOptions, Projector};
use crate::scalar::Scalar;

/// Feasibility required of every emitted point.
pub const OLO_FEASIBILITY_TOL: f64 = 1e-8;

/// FTRL for linear rewards over a fixed horizon `L`.
///
/// Round `ℓ` plays `Proj(u₁ + η Σ_{t<ℓ} d_t)` with `η = D/(G √(2L))`, which
/// guarantees regret at most `D G √(2L)` against every fixed point of the
/// body when `D` bounds its diameter and `G` every reward norm.
#[derive(Clone, Debug)]
pub struct FtrlOptimizer<S> {
    projector: Projector<S>,
    anchor: Vec<S>,
    eta: S,
    sum: Vec<S>,
    diameter: S,
    grad_bound: S,
    horizon: usize,
    rounds: usize,
    pending: bool,
}

impl<S: Scalar> FtrlOptimizer<S> {
    /// `anchor` must lie in `body`; `diameter >= 0` and `grad_bound > 0`
    /// are the constants `D` and `G` of the step size.
    pub fn new(
        body: &HPolytope<S>,
        anchor: Vec<S>,
        diameter: S,
        grad_bound: S,
        horizon: usize,
    ) -> Result<Self> {
        check_dim(body.dim(), anchor.len())?;
        if horizon == 0 {
            return Err(Error::Argument("horizon must be at least 1".into()));
        }
        if !(diameter >= S::zero()) || !diameter.is_finite() {
            return Err(Error::Argument(format!("diameter {diameter} must be finite and >= 0")));
        }
        if !(grad_bound > S::zero()) || !grad_bound.is_finite() {
            return Err(Error::Argument(format!("reward bound {grad_bound} must be finite and > 0")));
        }
        let r = body.residual(&anchor);
        if r > S::of(OLO_FEASIBILITY_TOL) {
            return Err(Error::Argument(format!("anchor violates the body by {r}")));
        }
        let opts = ProjectionOptions {
            max_iters: 100_000,
            feasibility_tol: OLO_FEASIBILITY_TOL * 0.1,
            step_tol: 1e-13,
        };
        let eta = diameter / (grad_bound * (S::of(2.0) * S::of(horizon as f64)).sqrt());
        Ok(FtrlOptimizer {
            projector: Projector::new(body, opts)?,
            sum: vec![S::zero(); anchor.len()],
            anchor,
            eta,
            diameter,
            grad_bound,
            horizon,
            rounds: 0,
            pending: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn eta(&self) -> S {
        self.eta
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Rounds completed so far (points whose reward has been fed back).
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// `D G √(2L)`.
    pub fn regret_bound(&self) -> S {
        self.diameter * self.grad_bound * (S::of(2.0) * S::of(self.horizon as f64)).sqrt()
    }

    /// The point for the current round. Each call must be followed by
    /// exactly one [`FtrlOptimizer::feed`].
    pub fn next(&mut self) -> Result<Vec<S>> {
        if self.pending {
            return Err(Error::Protocol(format!(
                "round {} already has a point awaiting its reward",
                self.rounds + 1
            )));
        }
        let target: Vec<S> = self
            .anchor
            .iter()
            .zip(&self.sum)
            .map(|(&u, &d)| u + self.eta * d)
            .collect();
        let point = if self.sum.iter().all(|&d| d == S::zero()) {
            self.anchor.clone()
        } else {
            self.projector.project(&target)?.into_vec()
        };
        self.pending = true;
        Ok(point)
    }

    /// Reveals the reward vector of the current round.
    pub fn feed(&mut self, reward: &[S]) -> Result<()> {
        if !self.pending {
            return Err(Error::Protocol(format!(
                "reward for round {} fed without a pending point",
                self.rounds + 1
            )));
        }
        check_dim(self.dim(), reward.len())?;
        if let Some(j) = reward.iter().position(|d| !d.is_finite()) {
            return Err(Error::Argument(format!("reward coordinate {j} is not finite")));
        }
        for (s, &d) in self.sum.iter_mut().zip(reward) {
            *s += d;
        }
        self.rounds += 1;
        self.pending = false;
        Ok(())
    }
}

/// [`FtrlOptimizer`] for an unknown horizon: epochs of length `1, 2, 4, ...`,
/// each a fresh optimizer tuned to its own length.
#[derive(Clone, Debug)]
pub struct DoublingOlo<S> {
    body: HPolytope<S>,
    anchor: Vec<S>,
    diameter: S,
    grad_bound: S,
    inner: FtrlOptimizer<S>,
}

impl<S: Scalar> DoublingOlo<S> {
    pub fn new(body: HPolytope<S>, anchor: Vec<S>, diameter: S, grad_bound: S) -> Result<Self> {
        let inner = FtrlOptimizer::new(&body, anchor.clone(), diameter, grad_bound, 1)?;
        Ok(DoublingOlo {
            body,
            anchor,
            diameter,
            grad_bound,
            inner,
        })
    }

    pub fn next(&mut self) -> Result<Vec<S>> {
        if self.inner.rounds() == self.inner.horizon() {
            let len = self.inner.horizon() * 2;
            self.inner =
                FtrlOptimizer::new(&self.body, self.anchor.clone(), self.diameter, self.grad_bound, len)?;
        }
        self.inner.next()
    }

    pub fn feed(&mut self, reward: &[S]) -> Result<()> {
        self.inner.feed(reward)
    }

    /// Sum of the per-epoch bounds over the first `rounds` rounds; at most
    /// `2/(√2 - 1) · D G √rounds`.
    pub fn regret_bound(&self, rounds: usize) -> S {
        let mut total = S::zero();
        let mut left = rounds;
        let mut len = 1usize;
        while left > 0 {
            total += self.diameter * self.grad_bound * (S::of(2.0) * S::of(len as f64)).sqrt();
            left = left.saturating_sub(len);
            len *= 2;
        }
        total
    }
}
