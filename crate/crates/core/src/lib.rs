//! Numerical toolkit for the split anisotropic equation
//! `Σ_{i≤s} ∂_ii u + Σ_{i>s} ∂_i A_i(x, u, ∇u) = 0` with `1 < p < 2` growth
//! in the last `N - s` directions: a grid solver, intrinsic-scaling
//! geometry, and empirical checks of Harnack, expansion-of-positivity and
//! Hölder estimates.

// NaN inputs are rejected with negated comparisons throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kscover;
pub mod params;
pub mod regularity;
pub mod solver;
mod util;

pub use error::{Error, Result};
pub use field::{BoundaryData, Grid, ScalarField, Sign};
pub use params::{ExponentTable, IntrinsicScale, StructureParams};
