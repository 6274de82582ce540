use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::objectives::QuadraticObjective;
use crate::polytope::{Decomposition, HPolytope, Halfspace};
use crate::scalar::Scalar;

/// Largest dimension for which the exact vertex enumeration is run.
pub const MAX_QP_DIM: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QpDistribution {
    /// `H_ij ~ U[-1, 0]`, `A_ij ~ U[0.01, 1.01]`.
    Uniform,
    /// `H_ij ~ -Exp(1)`, `A_ij ~ Exp(0.25) + 0.01` (rates).
    Exponential,
}

/// A packing-constrained quadratic program
/// `max ½ xᵀHx + hᵀx + c  s.t.  A x <= 1, 0 <= x <= u`,
/// together with its rescaling `x = u ⊙ x̃` onto the unit box, which is what
/// the solvers consume.
#[derive(Clone, Debug)]
pub struct QpInstance<S> {
    /// Row-major `n × n`.
    pub hess: Vec<S>,
    pub lin: Vec<S>,
    pub offset: S,
    /// Row-major `rows × n`.
    pub packing: Vec<S>,
    pub rows: usize,
    pub upper: Vec<S>,
    /// Objective in the rescaled coordinates `x̃ ∈ [0,1]^n`.
    pub objective: QuadraticObjective<S>,
    /// `N = {0}`, `D = {x̃ : A diag(u) x̃ <= 1}`.
    pub decomposition: Decomposition<S>,
}

impl<S: Scalar> QpInstance<S> {
    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    /// Maps a unit-box solution back to the original box `[0, u]`.
    pub fn unscale(&self, x: &[S]) -> Vec<S> {
        x.iter().zip(&self.upper).map(|(&a, &u)| a * u).collect()
    }
}

/// `u_j = min_i b_i / A_ij` over the rows with `A_ij > 0` (`+∞` if none).
pub fn box_upper<S: Scalar>(packing: &[S], rows: usize, rhs: &[S]) -> Result<Vec<S>> {
    check_dim(rows, rhs.len())?;
    if rows == 0 {
        return Err(Error::Argument("packing matrix without rows".into()));
    }
    if packing.len() % rows != 0 {
        return Err(Error::Dimension {
            expected: rows * (packing.len() / rows + 1),
            got: packing.len(),
        });
    }
    let n = packing.len() / rows;
    Ok((0..n)
        .map(|j| {
            (0..rows)
                .filter(|&i| packing[i * n + j] > S::zero())
                .map(|i| rhs[i] / packing[i * n + j])
                .fold(S::infinity(), S::min)
        })
        .collect())
}

/// `-min_{0 <= x <= u} (½ xᵀHx + hᵀx)`, exact when every `H_jj <= 0`.
///
/// Such a function is concave along each coordinate, so some vertex of the
/// box attains the minimum. The `2^n` vertices are visited in Gray-code
/// order, keeping `H x` up to date in `O(n)` per flip.
pub fn qp_offset<S: Scalar>(hess: &[S], lin: &[S], upper: &[S]) -> Result<S> {
    let n = lin.len();
    check_dim(n * n, hess.len())?;
    check_dim(n, upper.len())?;
    if n > MAX_QP_DIM {
        return Err(Error::Guard(format!(
            "vertex enumeration limited to n <= {MAX_QP_DIM}, got {n}"
        )));
    }
    if let Some(j) = (0..n).find(|&j| hess[j * n + j] > S::zero()) {
        return Err(Error::Argument(format!(
            "H[{j}][{j}] > 0: the box minimum need not sit at a vertex"
        )));
    }
    let half = S::of(0.5);
    let mut on = vec![false; n];
    let mut hx = vec![S::zero(); n];
    let mut value = S::zero();
    let mut best = S::zero();
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let step = if on[j] { -upper[j] } else { upper[j] };
        on[j] = !on[j];
        // f(x + s e_j) - f(x) = s (Hx)_j + ½ s² H_jj + s h_j
        value += step * hx[j] + half * step * step * hess[j * n + j] + step * lin[j];
        for (i, hxi) in hx.iter_mut().enumerate() {
            *hxi += hess[i * n + j] * step;
        }
        best = best.min(value);
    }
    Ok(-best)
}

/// Draws a seeded instance with `rows` packing constraints.
pub fn make_qp_instance<S: Scalar>(
    n: usize,
    rows: usize,
    dist: QpDistribution,
    seed: u64,
) -> Result<QpInstance<S>> {
    if n == 0 || rows == 0 {
        return Err(Error::Argument("QP instance needs n >= 1 and rows >= 1".into()));
    }
    if n > MAX_QP_DIM {
        return Err(Error::Guard(format!(
            "QP generation needs the exact offset oracle, limited to n <= {MAX_QP_DIM}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp_h = Exp::new(1.0).expect("valid rate");
    let exp_a = Exp::new(0.25).expect("valid rate");

    let mut hess = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = match dist {
                QpDistribution::Uniform => -rng.random::<f64>(),
                QpDistribution::Exponential => -exp_h.sample(&mut rng),
            };
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    let packing: Vec<f64> = (0..rows * n)
        .map(|_| match dist {
            QpDistribution::Uniform => 0.01 + rng.random::<f64>(),
            QpDistribution::Exponential => exp_a.sample(&mut rng) + 0.01,
        })
        .collect();

    let hess: Vec<S> = hess.into_iter().map(S::of).collect();
    let packing: Vec<S> = packing.into_iter().map(S::of).collect();
    let upper = box_upper(&packing, rows, &vec![S::one(); rows])?;
    // h = -0.1 Hᵀu
    let lin: Vec<S> = (0..n)
        .map(|j| -S::of(0.1) * (0..n).map(|i| hess[i * n + j] * upper[i]).sum::<S>())
        .collect();
    let m = qp_offset(&hess, &lin, &upper)?;
    let offset = m + S::of(0.1) * m.abs();

    let scaled_hess: Vec<S> = (0..n * n)
        .map(|k| hess[k] * upper[k / n] * upper[k % n])
        .collect();
    let scaled_lin: Vec<S> = lin.iter().zip(&upper).map(|(&h, &u)| h * u).collect();
    let objective = QuadraticObjective::new(n, scaled_hess, scaled_lin, offset)?;

    let body_rows = (0..rows)
        .map(|i| {
            let a: Vec<S> = (0..n).map(|j| packing[i * n + j] * upper[j]).collect();
            Halfspace::from_dense(&a, S::one(), false)
        })
        .collect();
    let down = HPolytope::new(n, body_rows, true)?;
    let decomposition = Decomposition::new(HPolytope::origin(n), down)?;

    Ok(QpInstance {
        hess,
        lin,
        offset,
        packing,
        rows,
        upper,
        objective,
        decomposition,
    })
}
