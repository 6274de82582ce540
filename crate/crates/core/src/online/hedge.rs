//! Full-information Hedge over a fixed set of experts.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Multiplicative weights `w_k ∝ exp(η R_k)` over cumulative rewards `R_k`,
/// with `η = √(8 ln K / L)`.
#[derive(Clone, Debug)]
pub struct Hedge<S> {
    cumulative: Vec<S>,
    weights: Vec<S>,
    eta: S,
    pending: bool,
}

impl<S: Scalar> Hedge<S> {
    pub fn new(experts: usize, horizon: usize) -> Result<Self> {
        if experts == 0 || horizon == 0 {
            return Err(Error::Argument(
                "Hedge needs at least one expert and one round".into(),
            ));
        }
        let k = S::of(experts as f64);
        let eta = (S::of(8.0) * k.ln() / S::of(horizon as f64)).sqrt();
        Ok(Hedge {
            cumulative: vec![S::zero(); experts],
            weights: vec![S::one() / k; experts],
            eta,
            pending: false,
        })
    }

    pub fn experts(&self) -> usize {
        self.weights.len()
    }

    pub fn eta(&self) -> S {
        self.eta
    }

    /// Current weights without advancing the protocol.
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Distribution played this round.
    pub fn step(&mut self) -> Result<Vec<S>> {
        if self.pending {
            return Err(Error::Protocol(
                "Hedge distribution requested twice without feedback".into(),
            ));
        }
        self.pending = true;
        Ok(self.weights.clone())
    }

    /// Rewards of every expert for this round, each in `[0,1]`.
    pub fn feedback(&mut self, rewards: &[S]) -> Result<()> {
        if !self.pending {
            return Err(Error::Protocol("Hedge feedback without a pending round".into()));
        }
        crate::error::check_dim(self.experts(), rewards.len())?;
        let tol = S::of(1e-9);
        for (k, &r) in rewards.iter().enumerate() {
            if !(r >= -tol && r <= S::one() + tol) {
                return Err(Error::Argument(format!(
                    "reward {r} of expert {k} outside [0,1]"
                )));
            }
        }
        for (c, &r) in self.cumulative.iter_mut().zip(rewards) {
            *c += r.max(S::zero()).min(S::one());
        }
        let top = self.cumulative.iter().copied().fold(S::neg_infinity(), S::max);
        let raw: Vec<S> = self
            .cumulative
            .iter()
            .map(|&c| (self.eta * (c - top)).exp())
            .collect();
        let total: S = raw.iter().copied().sum();
        for (w, r) in self.weights.iter_mut().zip(raw) {
            *w = r / total;
        }
        self.pending = false;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_expert() {
        let mut h = Hedge::<f64>::new(1, 10).unwrap();
        for _ in 0..10 {
            assert_eq!(h.step().unwrap(), vec![1.0]);
            h.feedback(&[0.3]).unwrap();
        }
    }

    #[test]
    fn constant_rewards_stay_uniform() {
        let mut h = Hedge::<f64>::new(4, 100).unwrap();
        for _ in 0..100 {
            let w = h.step().unwrap();
            assert!(w.iter().all(|&v| (v - 0.25).abs() <= 1e-15));
            h.feedback(&[0.7; 4]).unwrap();
        }
    }

    #[test]
    fn rejects_out_of_range_and_misuse() {
        let mut h = Hedge::<f64>::new(2, 10).unwrap();
        assert!(matches!(h.feedback(&[0.0, 0.0]), Err(Error::Protocol(_))));
        h.step().unwrap();
        assert!(matches!(h.step(), Err(Error::Protocol(_))));
        assert!(matches!(h.feedback(&[1.1, 0.0]), Err(Error::Argument(_))));
        h.feedback(&[1.0 + 5e-10, 0.0]).unwrap();
    }

    #[test]
    fn regret_against_the_better_expert() {
        let l = 1000;
        let mut h = Hedge::<f64>::new(2, l).unwrap();
        let mut gained = 0.0;
        for _ in 0..l {
            let w = h.step().unwrap();
            gained += w[0];
            h.feedback(&[1.0, 0.0]).unwrap();
            let s: f64 = h.weights().iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
        let bound = (l as f64 / 2.0 * 2f64.ln()).sqrt();
        assert!(gained >= l as f64 - bound - 1.0, "gained {gained}");
    }
}
