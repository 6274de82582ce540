//! Maximization of non-negative DR-submodular functions over polytopes that
//! split as `K = (N + D) ∩ [0,1]^n`, with `D` down-closed: offline
//! Frank-Wolfe / continuous-greedy hybrids, their online counterpart, the
//! usual baselines, objective families and instance generators.
//!
//! Everything numeric is generic over [`Scalar`]; [`f64`] is the reference
//! precision and the `*64` / `*32` aliases below fix the common choices.

pub mod error;
pub mod instances;
pub mod objectives;
pub mod offline;
pub mod online;
pub mod polytope;
pub mod scalar;
pub mod vecmath;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point64 = vecmath::Point<f64>;
pub type Point32 = vecmath::Point<f32>;
pub type Polytope64 = polytope::HPolytope<f64>;
pub type Polytope32 = polytope::HPolytope<f32>;
pub type Decomposition64 = polytope::Decomposition<f64>;
pub type Decomposition32 = polytope::Decomposition<f32>;
pub type Trace64 = offline::Trace<f64>;
pub type Trace32 = offline::Trace<f32>;
