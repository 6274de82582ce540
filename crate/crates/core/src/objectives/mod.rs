//! Non-negative DR-submodular objectives with exact value and gradient
//! oracles, plus numerical checks of the properties the solvers rely on.

mod location;
mod qp;
mod quadratic;
mod revenue;

use rand::Rng;

use crate::error::{check_dim, Result};
use crate::scalar::Scalar;
use crate::vecmath::{linf_norm, psum_slices};

pub use location::LocationObjective;
pub use qp::{box_upper, make_qp_instance, qp_offset, QpDistribution, QpInstance, MAX_QP_DIM};
pub use quadratic::QuadraticObjective;
pub use revenue::RevenueObjective;

/// A smooth function on `[0,1]^n` with a gradient oracle.
///
/// Implementations are immutable after construction, so evaluation is
/// reentrant and can be shared between threads.
pub trait Objective<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[S]) -> Result<S>;

    fn gradient(&self, x: &[S]) -> Result<Vec<S>>;

    /// Upper bound on the Lipschitz constant of the gradient (ℓ2 to ℓ2).
    fn beta(&self) -> S;

    /// Upper bound on the value over `[0,1]^n`, used to normalize rewards.
    fn value_upper(&self) -> S;
}

impl<S: Scalar, T: Objective<S> + ?Sized> Objective<S> for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[S]) -> Result<S> {
        (**self).value(x)
    }
    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        (**self).gradient(x)
    }
    fn beta(&self) -> S {
        (**self).beta()
    }
    fn value_upper(&self) -> S {
        (**self).value_upper()
    }
}

impl<S: Scalar, T: Objective<S> + ?Sized> Objective<S> for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[S]) -> Result<S> {
        (**self).value(x)
    }
    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        (**self).gradient(x)
    }
    fn beta(&self) -> S {
        (**self).beta()
    }
    fn value_upper(&self) -> S {
        (**self).value_upper()
    }
}

impl<S: Scalar, T: Objective<S> + ?Sized> Objective<S> for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[S]) -> Result<S> {
        (**self).value(x)
    }
    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        (**self).gradient(x)
    }
    fn beta(&self) -> S {
        (**self).beta()
    }
    fn value_upper(&self) -> S {
        (**self).value_upper()
    }
}

/// Default step for [`fd_gradient_check`].
pub const FD_STEP: f64 = 1e-5;

/// Largest `|analytic - numeric| / (1 + |numeric|)` over the coordinates,
/// with central differences of half-width `step`.
pub fn fd_gradient_check<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    x: &[S],
    step: S,
) -> Result<S> {
    check_dim(obj.dim(), x.len())?;
    let g = obj.gradient(x)?;
    let mut probe = x.to_vec();
    let mut worst = S::zero();
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let up = obj.value(&probe)?;
        probe[j] = x[j] - step;
        let down = obj.value(&probe)?;
        probe[j] = x[j];
        let numeric = (up - down) / (step + step);
        worst = worst.max((g[j] - numeric).abs() / (S::one() + numeric.abs()));
    }
    Ok(worst)
}

/// Counts of sampled violations of the DR-submodularity consequences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DrReport {
    pub pairs: usize,
    /// `x <= y` but some coordinate of `∇F(y)` exceeds that of `∇F(x)`.
    pub gradient_order: usize,
    /// `⟨∇F(x), y - x⟩ < F(y) - F(x)`.
    pub upper_linearization: usize,
    /// `⟨∇F(y), y - x⟩ > F(y) - F(x)`.
    pub lower_linearization: usize,
    /// `F(x ⊕ v) < (1 - ‖v‖_∞) F(x)`.
    pub psum_norm_bound: usize,
    /// Largest scaled violation seen across all checks.
    pub worst: f64,
}

impl DrReport {
    pub fn violations(&self) -> usize {
        self.gradient_order + self.upper_linearization + self.lower_linearization + self.psum_norm_bound
    }
}

/// Samples `pairs` comparable pairs `x <= y` (and an independent `v`) and
/// checks the gradient order, both first-order bounds along `y - x`, and
/// `F(x ⊕ v) >= (1 - ‖v‖_∞) F(x)`. Tolerance is `tol · (1 + scale)`.
pub fn dr_probe<S: Scalar, F: Objective<S> + ?Sized, R: Rng + ?Sized>(
    obj: &F,
    pairs: usize,
    tol: f64,
    rng: &mut R,
) -> Result<DrReport> {
    let n = obj.dim();
    let t = S::of(tol);
    let mut rep = DrReport {
        pairs,
        ..DrReport::default()
    };
    let note = |gap: S, scale: S, counter: &mut usize, worst: &mut f64| {
        let allowed = t * (S::one() + scale.abs());
        if gap > allowed {
            *counter += 1;
            *worst = worst.max(gap.to_f64_lossy());
        }
    };
    for _ in 0..pairs {
        let x: Vec<S> = (0..n).map(|_| S::of(rng.random::<f64>())).collect();
        let y: Vec<S> = x
            .iter()
            .map(|&xi| xi + (S::one() - xi) * S::of(rng.random::<f64>()))
            .collect();
        let shrink = S::of(rng.random::<f64>());
        let v: Vec<S> = (0..n).map(|_| shrink * S::of(rng.random::<f64>())).collect();

        let (fx, fy) = (obj.value(&x)?, obj.value(&y)?);
        let (gx, gy) = (obj.gradient(&x)?, obj.gradient(&y)?);
        let mut worst_coord = S::zero();
        for j in 0..n {
            worst_coord = worst_coord.max(gy[j] - gx[j]);
        }
        let mut scratch = 0usize;
        note(worst_coord, S::zero(), &mut scratch, &mut rep.worst);
        rep.gradient_order += scratch.min(1);

        let d: Vec<S> = y.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let gxd: S = gx.iter().zip(&d).map(|(&a, &b)| a * b).sum();
        let gyd: S = gy.iter().zip(&d).map(|(&a, &b)| a * b).sum();
        note((fy - fx) - gxd, fy.abs() + fx.abs(), &mut rep.upper_linearization, &mut rep.worst);
        note(gyd - (fy - fx), fy.abs() + fx.abs(), &mut rep.lower_linearization, &mut rep.worst);

        let xv = psum_slices(&x, &v);
        let bound = (S::one() - linf_norm(&v)) * fx;
        let fxv = obj.value(&xv)?;
        note(bound - fxv, fx, &mut rep.psum_norm_bound, &mut rep.worst);
    }
    Ok(rep)
}

/// Left-hand side minus right-hand side of the subset-expansion bound
/// `F(⊕_i p_i x_i) >= Σ_{S ⊆ [r]} Π_{i∈S} p_i Π_{i∉S} (1 - p_i) F(⊕_{i∈S} x_i)`,
/// by exhaustive enumeration of the `2^r` subsets (`r <= 16`).
pub fn subset_expansion_gap<S: Scalar, F: Objective<S> + ?Sized>(
    obj: &F,
    xs: &[Vec<S>],
    probs: &[S],
) -> Result<S> {
    let n = obj.dim();
    let r = xs.len();
    check_dim(r, probs.len())?;
    if r > 16 {
        return Err(crate::Error::Guard(format!("{r} vectors exceed the 16-vector subset limit")));
    }
    for x in xs {
        check_dim(n, x.len())?;
    }
    let mut lhs_point = vec![S::zero(); n];
    for (x, &p) in xs.iter().zip(probs) {
        let scaled: Vec<S> = x.iter().map(|&v| p * v).collect();
        lhs_point = psum_slices(&lhs_point, &scaled);
    }
    let lhs = obj.value(&lhs_point)?;
    let mut rhs = S::zero();
    for mask in 0u32..(1u32 << r) {
        let mut weight = S::one();
        let mut point = vec![S::zero(); n];
        for (i, x) in xs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                weight *= probs[i];
                point = psum_slices(&point, x);
            } else {
                weight *= S::one() - probs[i];
            }
        }
        rhs += weight * obj.value(&point)?;
    }
    Ok(lhs - rhs)
}

/// Largest sampled ratio `‖∇F(x) - ∇F(y)‖ / ‖x - y‖` over `pairs` random pairs.
pub fn sampled_lipschitz<S: Scalar, F: Objective<S> + ?Sized, R: Rng + ?Sized>(
    obj: &F,
    pairs: usize,
    rng: &mut R,
) -> Result<S> {
    let n = obj.dim();
    let mut worst = S::zero();
    for _ in 0..pairs {
        let x: Vec<S> = (0..n).map(|_| S::of(rng.random::<f64>())).collect();
        let y: Vec<S> = (0..n).map(|_| S::of(rng.random::<f64>())).collect();
        let dist = crate::vecmath::l2_dist(&x, &y);
        if dist <= S::zero() {
            continue;
        }
        let gd = crate::vecmath::l2_dist(&obj.gradient(&x)?, &obj.gradient(&y)?);
        worst = worst.max(gd / dist);
    }
    Ok(worst)
}
