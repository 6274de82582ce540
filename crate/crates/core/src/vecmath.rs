//! Coordinate-wise vector algebra on `[0,1]^n`.
//!
//! `⊙` is the Hadamard product and `⊕` the probabilistic sum
//! `x ⊕ y = 1 - (1 - x) ⊙ (1 - y)`. Both are closed on `[0,1]^n`, `⊕` is
//! symmetric and associative with `0` as identity and `1` as absorbing element.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// A vector of `[0,1]^n`.
///
/// Construction checks that every coordinate is finite and lies in
/// `[-tol, 1 + tol]` for the scalar's feasibility tolerance. Values are
/// stored as given: clamping only happens through [`Point::clamped`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<S>", into = "Vec<S>")]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct Point<S>(Vec<S>);

impl<S: Scalar> Point<S> {
    pub fn new(coords: Vec<S>) -> Result<Self> {
        let tol = S::feas_tol();
        for (i, &c) in coords.iter().enumerate() {
            if !c.is_finite() || c < -tol || c > S::one() + tol {
                return Err(Error::Argument(format!(
                    "coordinate {i} = {c} outside [0,1]"
                )));
            }
        }
        Ok(Point(coords))
    }

    /// Clamps every coordinate into `[0,1]`. Non-finite input is rejected.
    pub fn clamped(coords: Vec<S>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Argument(format!("coordinate {i} is not finite")));
        }
        Ok(Point(
            coords
                .into_iter()
                .map(|c| c.max(S::zero()).min(S::one()))
                .collect(),
        ))
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![S::zero(); n])
    }

    pub fn ones(n: usize) -> Self {
        Point(vec![S::one(); n])
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }

    pub fn hadamard(&self, other: &Point<S>) -> Result<Point<S>> {
        hadamard(self, other)
    }

    pub fn psum(&self, other: &Point<S>) -> Result<Point<S>> {
        psum(self, other)
    }

    pub fn linf_norm(&self) -> S {
        linf_norm(&self.0)
    }

    /// `1 - x`.
    pub fn complement(&self) -> Point<S> {
        Point(self.0.iter().map(|&v| S::one() - v).collect())
    }
}

impl<S> Deref for Point<S> {
    type Target = [S];

    fn deref(&self) -> &[S] {
        &self.0
    }
}

impl<S: Scalar> TryFrom<Vec<S>> for Point<S> {
    type Error = Error;

    fn try_from(v: Vec<S>) -> Result<Self> {
        Point::new(v)
    }
}

impl<S> From<Point<S>> for Vec<S> {
    fn from(p: Point<S>) -> Vec<S> {
        p.0
    }
}

pub fn hadamard<S: Scalar>(x: &Point<S>, y: &Point<S>) -> Result<Point<S>> {
    check_dim(x.len(), y.len())?;
    Ok(Point(x.iter().zip(y.iter()).map(|(&a, &b)| a * b).collect()))
}

pub fn psum<S: Scalar>(x: &Point<S>, y: &Point<S>) -> Result<Point<S>> {
    check_dim(x.len(), y.len())?;
    Ok(Point(psum_slices(x, y)))
}

/// Left fold of [`psum`] over a nonempty list.
pub fn psum_fold<S: Scalar>(points: &[Point<S>]) -> Result<Point<S>> {
    let (first, rest) = points
        .split_first()
        .ok_or_else(|| Error::Argument("psum_fold of an empty list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, p| psum(&acc, p))
}

pub fn linf_norm<S: Scalar>(x: &[S]) -> S {
    x.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
}

/// `x + y - x y` on raw slices of equal length, evaluated as `x + y (1 - x)`.
pub(crate) fn psum_slices<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| a + b * (S::one() - a)).collect()
}

/// Element-wise product of two general vectors (gradients, weights, ...).
pub fn mul_elementwise<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| a * b).collect()
}

pub fn dot<S: Scalar>(x: &[S], y: &[S]) -> S {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

pub fn l2_norm<S: Scalar>(x: &[S]) -> S {
    x.iter().map(|&v| v * v).sum::<S>().sqrt()
}

pub fn l2_dist<S: Scalar>(x: &[S], y: &[S]) -> S {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<S>()
        .sqrt()
}
