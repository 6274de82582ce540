use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::scalar::Scalar;

/// `F(x) = ½ xᵀ H x + hᵀ x + c` on `[0,1]^n`.
///
/// With `H` symmetric and entrywise non-positive the function is
/// DR-submodular; [`QuadraticObjective::new`] enforces both.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObjective<S> {
    n: usize,
    hess: Vec<S>,
    lin: Vec<S>,
    offset: S,
}

impl<S: Scalar> QuadraticObjective<S> {
    /// `hess` is row-major `n × n`.
    pub fn new(n: usize, hess: Vec<S>, lin: Vec<S>, offset: S) -> Result<Self> {
        let q = Self::new_unsigned(n, hess, lin, offset)?;
        if let Some(k) = q.hess.iter().position(|&v| v > S::zero()) {
            return Err(Error::Validation(format!(
                "H[{}][{}] = {} is positive",
                k / n,
                k % n,
                q.hess[k]
            )));
        }
        Ok(q)
    }

    /// Like [`QuadraticObjective::new`] but accepts positive entries in `H`.
    /// The result is not DR-submodular; useful as a negative control.
    pub fn new_unsigned(n: usize, hess: Vec<S>, lin: Vec<S>, offset: S) -> Result<Self> {
        check_dim(n * n, hess.len())?;
        check_dim(n, lin.len())?;
        if hess.iter().chain(&lin).any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::Validation("non-finite quadratic coefficient".into()));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (hess[i * n + j], hess[j * n + i]);
                if (a - b).abs() > S::algebra_tol() * (S::one() + a.abs()) {
                    return Err(Error::Validation(format!("H is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(QuadraticObjective {
            n,
            hess,
            lin,
            offset,
        })
    }

    pub fn hessian(&self) -> &[S] {
        &self.hess
    }

    pub fn linear(&self) -> &[S] {
        &self.lin
    }

    pub fn offset(&self) -> S {
        self.offset
    }

    fn hx(&self, x: &[S]) -> Vec<S> {
        self.hess
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

impl<S: Scalar> Objective<S> for QuadraticObjective<S> {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[S]) -> Result<S> {
        check_dim(self.n, x.len())?;
        let hx = self.hx(x);
        let half = S::of(0.5);
        Ok(x.iter()
            .zip(&hx)
            .zip(&self.lin)
            .map(|((&xi, &hxi), &li)| xi * (half * hxi + li))
            .sum::<S>()
            + self.offset)
    }

    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        check_dim(self.n, x.len())?;
        let mut g = self.hx(x);
        for (gi, &li) in g.iter_mut().zip(&self.lin) {
            *gi += li;
        }
        Ok(g)
    }

    /// Frobenius norm of `H`, which dominates its spectral norm.
    fn beta(&self) -> S {
        self.hess.iter().map(|&v| v * v).sum::<S>().sqrt()
    }

    /// `c + Σ max(h_j, 0) + ½ Σ max(H_ij, 0)`: every term of `F` bounded
    /// separately on the unit box.
    fn value_upper(&self) -> S {
        let lin: S = self.lin.iter().map(|&v| v.max(S::zero())).sum();
        let quad: S = self.hess.iter().map(|&v| v.max(S::zero())).sum();
        self.offset + lin + S::of(0.5) * quad
    }
}
