use std::f64::consts::PI;

use super::flux::unit_dflux;
use crate::field::{BoundaryData, Grid, ScalarField};

/// Manufactured solutions for convergence studies. Both vary only along
/// the first axis and the last axis, which must be singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manufactured {
    /// `u* = x_N + 0.1 sin(π x_1) sin(π x_N)`.
    Sine,
    /// `u* = 1 + 0.5 x_1 + 0.25 x_N`, with zero forcing.
    Affine,
}

impl Manufactured {
    pub fn exact(self, x: &[f64]) -> f64 {
        let (x1, xn) = (x[0], x[x.len() - 1]);
        match self {
            Manufactured::Sine => xn + 0.1 * (PI * x1).sin() * (PI * xn).sin(),
            Manufactured::Affine => 1.0 + 0.5 * x1 + 0.25 * xn,
        }
    }

    /// `Σ_{i≤s} ∂_ii u* + ∂_N A(∂_N u*)` for the unit-coefficient flux.
    pub fn forcing(self, x: &[f64], p: f64, eps: f64) -> f64 {
        match self {
            Manufactured::Affine => 0.0,
            Manufactured::Sine => {
                let (x1, xn) = (x[0], x[x.len() - 1]);
                let ss = 0.1 * PI * PI * (PI * x1).sin() * (PI * xn).sin();
                let slope = 1.0 + 0.1 * PI * (PI * x1).sin() * (PI * xn).cos();
                -ss * (1.0 + unit_dflux(p, eps, slope))
            }
        }
    }

    pub fn exact_field(self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid.clone(), |x| self.exact(x))
    }

    pub fn forcing_field(self, grid: &Grid, eps: f64) -> ScalarField {
        let p = grid.p();
        ScalarField::from_fn(grid.clone(), |x| self.forcing(x, p, eps))
    }

    pub fn boundary(self, grid: &Grid) -> BoundaryData {
        BoundaryData::from_fn(grid, |x| self.exact(x))
    }
}
