use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::flux::FluxModel;
use super::operator::Operator;
use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, Sign};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationEntry {
    /// Weak form of `±(u - k)_±` against the test function.
    pub integral: f64,
    pub eta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub level: f64,
    pub sign: Sign,
    pub entries: Vec<TruncationEntry>,
}

impl TruncationReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| !e.pass).count()
    }
}

/// Checks that `(u - k)_+` is a subsolution (`Sign::Plus`) or that
/// `-(u - k)_-` is a supersolution (`Sign::Minus`) against every test
/// function. The slack is `tol_residual · ‖ψ‖_1` plus rounding, since the
/// truncation's residual is bounded by that of `u` wherever `ψ > 0`.
pub fn check_truncation_subsolution(
    u: &ScalarField,
    k: f64,
    sign: Sign,
    test_functions: &[ScalarField],
    flux: &FluxModel,
    tol_residual: f64,
) -> Result<TruncationReport> {
    let g = u.grid();
    for (j, psi) in test_functions.iter().enumerate() {
        if psi.grid() != g {
            return Err(Error::InvalidTestFunction(format!(
                "test function {j} is on a different grid"
            )));
        }
        if psi.values().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidTestFunction(format!(
                "test function {j} takes negative values"
            )));
        }
        if g.boundary_nodes().iter().any(|&i| psi.values()[i] != 0.0) {
            return Err(Error::InvalidTestFunction(format!(
                "test function {j} is nonzero on the boundary"
            )));
        }
    }
    let sgn = sign.as_f64();
    let w: Vec<f64> = u.truncate(k, sign).values().iter().map(|v| sgn * v).collect();
    let op = Operator::new(g, flux);
    let vol = g.cell_volume();
    let scale = u.sup_norm().max(1.0);
    let entries = test_functions
        .iter()
        .map(|psi| {
            let integral = op.weak_form(&w, psi.values());
            let l1 = vol * psi.values().iter().sum::<f64>();
            let sup = psi.sup_norm();
            let eta = tol_residual * l1 + 1e-12 * scale * sup;
            let pass = match sign {
                Sign::Plus => integral <= eta,
                Sign::Minus => integral >= -eta,
            };
            TruncationEntry { integral, eta, pass }
        })
        .collect();
    Ok(TruncationReport {
        level: k,
        sign,
        entries,
    })
}

/// Smooth nonnegative bumps `(1 - |x - c|²/r²)²_+` supported strictly
/// inside the grid, with random centers and radii.
pub fn bump_functions(grid: &Grid, count: usize, seed: u64) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.ndim();
    let lo = grid.origin().to_vec();
    let hi = grid.upper();
    let hmax = grid.spacing().iter().cloned().fold(0.0, f64::max);
    let width = (0..n).map(|a| hi[a] - lo[a]).fold(f64::INFINITY, f64::min);
    let rmin = (2.0 * hmax).min(0.2 * width);
    let rmax = (0.3 * width).max(rmin);
    (0..count)
        .map(|_| {
            let r = rng.gen_range(rmin..=rmax);
            let c: Vec<f64> = (0..n)
                .map(|a| {
                    let (a0, a1) = (lo[a] + r + hmax, hi[a] - r - hmax);
                    if a1 > a0 {
                        rng.gen_range(a0..a1)
                    } else {
                        0.5 * (lo[a] + hi[a])
                    }
                })
                .collect();
            let mut f = ScalarField::from_fn(grid.clone(), |x| {
                let d2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                let t = 1.0 - d2 / (r * r);
                if t > 0.0 {
                    t * t
                } else {
                    0.0
                }
            });
            for i in grid.boundary_nodes() {
                f.values_mut()[i] = 0.0;
            }
            f
        })
        .collect()
}
