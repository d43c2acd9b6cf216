//! Taylor expansions for differential equations driven by geometric
//! β-Hölder rough paths with `1/3 < β < 1/2`.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: the truncated tensor algebra and its ℓ1 norm.
//! * [`signature`]: piecewise-linear paths, their signatures and rough lifts,
//!   Hölder-constant and p-variation estimators.
//! * [`fbm`]: fractional Brownian motion sampling, dyadic interpolation and
//!   the Garsia-type functionals controlling the level-2 Hölder norm.
//! * [`poly`] and [`vector_fields`]: polynomial vector fields and the Taylor
//!   coefficients `P_I = (V_{i_1} ⋯ V_{i_k} π)(x_0)`.
//! * [`bounds`]: the explicit constants and factorial-decay inequalities.
//! * [`taylor`]: assembly of the expansion, stopping time and truncation bound.
//! * [`ode`]: the adaptive Runge–Kutta reference solver.

// negated float comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod csv;
pub mod error;
pub mod fbm;
pub mod ode;
pub mod poly;
pub mod signature;
pub mod special;
pub mod taylor;
pub mod tensor;
pub mod vector_fields;

pub use error::{Error, Result};
pub use tensor::{TensorNorm, TruncatedTensor, Word};
