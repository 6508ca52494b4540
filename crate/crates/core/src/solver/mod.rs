//! Energy minimization for the split equation
//! `Σ_{i≤s} ∂_ii u + Σ_{i>s} ∂_i A_i(∇u) = 0` on a rectangular grid with
//! Dirichlet data, plus the discrete weak form and the zoom-in transform.

mod flux;
mod minimize;
mod mms;
mod operator;
mod transform;
mod truncation;

use std::time::Duration;

pub use flux::{FluxModel, DEFAULT_EPS};
pub use mms::Manufactured;
pub use transform::{normalize_transform, Normalized, RESAMPLE_NODES};
pub use truncation::{bump_functions, check_truncation_subsolution, TruncationReport};

use crate::error::{Error, Result};
use crate::field::{BoundaryData, Grid, ScalarField};
use crate::params::StructureParams;
use operator::Operator;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_residual: f64,
    pub tol_energy: f64,
    pub max_sweeps: usize,
    pub epsilon: f64,
    /// Alternates which color is relaxed first in Gauss-Seidel sweeps.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-8,
            tol_energy: 1e-15,
            max_sweeps: 500,
            epsilon: DEFAULT_EPS,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0 && self.tol_residual.is_finite()) {
            return Err(Error::OutOfRange {
                what: "tol_residual",
                value: self.tol_residual,
                range: "(0, inf)",
            });
        }
        if !(self.tol_energy > 0.0 && self.tol_energy.is_finite()) {
            return Err(Error::OutOfRange {
                what: "tol_energy",
                value: self.tol_energy,
                range: "(0, inf)",
            });
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParams("max_sweeps must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: self.epsilon,
                range: "[0, inf)",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Gauss-Seidel sweeps plus majorize-minimize steps.
    pub sweeps: usize,
    pub residual: f64,
    pub energy: f64,
    pub converged: bool,
    pub wall_time: Duration,
    /// Value of the minimized functional after every iteration, starting
    /// with the initial guess.
    pub energy_history: Vec<f64>,
}

fn check_split(grid: &Grid, params: &StructureParams) -> Result<()> {
    if grid.split() != params.s() || grid.ndim() != params.n() {
        return Err(Error::SplitMismatch {
            expected: params.s(),
            found: grid.split(),
        });
    }
    Ok(())
}

/// Cell-averaged energy `Σ_{i≤s} ½ (D_i u)² + Σ_{i>s} |D_i u|^p / p` using
/// forward differences on every grid edge.
pub fn energy(field: &ScalarField, params: &StructureParams) -> Result<f64> {
    check_split(field.grid(), params)?;
    let op = Operator::new(field.grid(), &FluxModel::prototype(params.p(), 0.0));
    Ok(op.energy(field.values()))
}

/// Discrete divergence of the fluxes; zero on boundary nodes.
pub fn residual(field: &ScalarField, flux: &FluxModel, params: &StructureParams) -> Result<ScalarField> {
    check_split(field.grid(), params)?;
    if field.grid().interior_nodes().is_empty() {
        return Err(Error::EmptyRegion);
    }
    let op = Operator::new(field.grid(), flux);
    ScalarField::new(field.grid().clone(), op.residual(field.values(), None))
}

/// `vol Σ_edges A(D u) · D ψ`, with the identity flux on the first `s` axes.
pub fn weak_form(u: &ScalarField, psi: &ScalarField, flux: &FluxModel) -> Result<f64> {
    if u.grid() != psi.grid() {
        return Err(Error::InvalidTestFunction(
            "test function lives on a different grid".into(),
        ));
    }
    Ok(Operator::new(u.grid(), flux).weak_form(u.values(), psi.values()))
}

/// `vol Σ_nodes a b`.
pub fn inner(a: &ScalarField, b: &ScalarField) -> f64 {
    let vol = a.grid().cell_volume();
    vol * crate::util::det_sum(a.values().len(), |i| a.values()[i] * b.values()[i])
}

pub fn solve(
    grid: &Grid,
    bc: &BoundaryData,
    flux: &FluxModel,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    solve_impl(grid, bc, flux, None, cfg)
}

/// Solves `div A(∇u) = f` in the interior.
pub fn solve_forced(
    grid: &Grid,
    bc: &BoundaryData,
    flux: &FluxModel,
    f: &ScalarField,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    if f.grid() != grid {
        return Err(Error::InvalidGrid("forcing lives on a different grid".into()));
    }
    solve_impl(grid, bc, flux, Some(f.values()), cfg)
}

fn solve_impl(
    grid: &Grid,
    bc: &BoundaryData,
    flux: &FluxModel,
    forcing: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    cfg.validate()?;
    let p = grid.p();
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::OutOfRange {
            what: "p",
            value: p,
            range: "(1, 2)",
        });
    }
    if (flux.p() - p).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "flux exponent {} differs from grid exponent {p}",
            flux.p()
        )));
    }
    if bc.entries().len() != grid.boundary_nodes().len() {
        return Err(Error::InvalidBoundary("boundary data does not match grid".into()));
    }
    let flux = flux.clone().with_eps(cfg.epsilon);
    let op = Operator::new(grid, &flux);
    let init = if bc.min() == bc.max() { bc.min() } else { bc.mean() };
    let mut u = ScalarField::constant(grid.clone(), init);
    bc.apply(&mut u);
    let (values, report) = minimize::run(&op, u.into_values(), forcing, cfg);
    Ok((ScalarField::new(grid.clone(), values)?, report))
}
