//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the solvers are generic over (`f32` or `f64`).
///
/// Each implementation carries its own tolerance ladder: the defaults for
/// `f64` are the ones every test in this crate is pinned against, `f32`
/// gets looser values so that the same code paths stay usable.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Membership / feasibility tolerance.
    const FEASIBILITY_TOL: f64;
    /// Tolerance for algebraic identities.
    const ALGEBRA_TOL: f64;
    /// Smallest admissible pivot magnitude in the simplex tableau.
    const PIVOT_TOL: f64;

    /// Lossy conversion from an `f64` literal.
    fn of(v: f64) -> Self;

    fn feas_tol() -> Self {
        Self::of(Self::FEASIBILITY_TOL)
    }

    fn algebra_tol() -> Self {
        Self::of(Self::ALGEBRA_TOL)
    }

    fn pivot_tol() -> Self {
        Self::of(Self::PIVOT_TOL)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const FEASIBILITY_TOL: f64 = 1e-9;
    const ALGEBRA_TOL: f64 = 1e-12;
    const PIVOT_TOL: f64 = 1e-10;

    #[inline]
    fn of(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    const FEASIBILITY_TOL: f64 = 1e-4;
    const ALGEBRA_TOL: f64 = 1e-5;
    const PIVOT_TOL: f64 = 1e-6;

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
}
