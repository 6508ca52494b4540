use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::StructureParams;

/// Per-direction flux `A_i(x, ξ_i) = c_i(x) (ε² + ξ_i²)^{(p-2)/2} ξ_i` for
/// the singular directions.
///
/// `c_i(x) = coeffs[i] · (1 + modulation · cos(2π Σ_j x_j))`; the prototype
/// has unit coefficients and no modulation. With `ε > 0` the flux is smooth
/// and the associated potential stays convex.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    p: f64,
    eps: f64,
    coeffs: Vec<f64>,
    modulation: f64,
}

pub const DEFAULT_EPS: f64 = 1e-8;

impl FluxModel {
    pub fn prototype(p: f64, eps: f64) -> Self {
        Self {
            p,
            eps,
            coeffs: Vec::new(),
            modulation: 0.0,
        }
    }

    /// Constant coefficient per singular direction (index 0 is axis `s`).
    pub fn anisotropic(p: f64, eps: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParams("flux coefficients must be positive".into()));
        }
        Ok(Self {
            p,
            eps,
            coeffs,
            modulation: 0.0,
        })
    }

    pub fn with_modulation(mut self, amplitude: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::OutOfRange {
                what: "modulation",
                value: amplitude,
                range: "[0, 1)",
            });
        }
        self.modulation = amplitude;
        Ok(self)
    }

    /// Every coefficient multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        if out.coeffs.is_empty() {
            out.coeffs = vec![k];
        } else {
            out.coeffs.iter_mut().for_each(|c| *c *= k);
        }
        out
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn is_homogeneous_in_x(&self) -> bool {
        self.modulation == 0.0
    }

    /// Coefficient of singular direction `j` (0-based among singular axes).
    pub fn coefficient(&self, j: usize, x: &[f64]) -> f64 {
        let base = match self.coeffs.len() {
            0 => 1.0,
            1 => self.coeffs[0],
            _ => self.coeffs[j.min(self.coeffs.len() - 1)],
        };
        if self.modulation == 0.0 {
            base
        } else {
            let t: f64 = x.iter().sum();
            base * (1.0 + self.modulation * (2.0 * std::f64::consts::PI * t).cos())
        }
    }

    fn coeff_bounds(&self) -> (f64, f64) {
        let (lo, hi) = if self.coeffs.is_empty() {
            (1.0, 1.0)
        } else {
            self.coeffs
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)))
        };
        (lo * (1.0 - self.modulation), hi * (1.0 + self.modulation))
    }

    /// Structure constants `(C1, C2, C)` this flux satisfies over `n_singular`
    /// directions; the `ε`-regularization costs at most `c ε^p` per direction
    /// in the coercivity bound.
    pub fn structure_constants(&self, n_singular: usize) -> (f64, f64, f64) {
        let (lo, hi) = self.coeff_bounds();
        (lo, hi, n_singular as f64 * hi * self.eps.powf(self.p))
    }

    /// `A(ξ)` with unit coefficient.
    #[inline]
    pub fn unit_flux(&self, xi: f64) -> f64 {
        unit_flux(self.p, self.eps, xi)
    }

    /// `dA/dξ` with unit coefficient.
    #[inline]
    pub fn unit_dflux(&self, xi: f64) -> f64 {
        unit_dflux(self.p, self.eps, xi)
    }

    /// Evaluates `A_j(x, u, ξ)`; `u` does not enter these models.
    pub fn eval(&self, j: usize, x: &[f64], _u: f64, xi: f64) -> f64 {
        self.coefficient(j, x) * self.unit_flux(xi)
    }

    /// Samples `(x, ξ)` and checks coercivity and growth against `params`
    /// (with the regularization allowance added to `C`).
    pub fn validate(&self, params: &StructureParams, samples: usize, seed: u64) -> Result<()> {
        if (self.p - params.p()).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "flux exponent {} differs from p = {}",
                self.p,
                params.p()
            )));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon = {}", self.eps)));
        }
        let ns = params.singular_dims();
        let (_, _, c_reg) = self.structure_constants(ns);
        let c = params.c() + c_reg;
        let p = self.p;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xi = vec![0.0; ns];
        let mut x = vec![0.0; params.n()];
        for _ in 0..samples {
            x.iter_mut().for_each(|v| *v = rng.gen_range(-2.0..2.0));
            for v in xi.iter_mut() {
                let mag = 10f64.powf(rng.gen_range(-10.0..4.0));
                *v = if rng.gen_bool(0.5) { mag } else { -mag };
            }
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for (j, &z) in xi.iter().enumerate() {
                let a = self.eval(j, &x, 0.0, z);
                lhs += a * z;
                rhs += z.abs().powf(p);
                let bound = params.c2() * z.abs().powf(p - 1.0) + params.c();
                if a.abs() > bound * (1.0 + 1e-12) + 1e-300 {
                    return Err(Error::InvalidParams(format!(
                        "growth bound violated: |A| = {} > {bound} at xi = {z}",
                        a.abs()
                    )));
                }
            }
            let floor = params.c1() * rhs - c;
            if lhs < floor - 1e-12 * floor.abs() {
                return Err(Error::InvalidParams(format!("coercivity violated: {lhs} < {floor}")));
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn unit_flux(p: f64, eps: f64, xi: f64) -> f64 {
    let r2 = eps * eps + xi * xi;
    if r2 == 0.0 {
        return 0.0;
    }
    r2.powf(0.5 * (p - 2.0)) * xi
}

#[inline]
pub(crate) fn unit_dflux(p: f64, eps: f64, xi: f64) -> f64 {
    let e2 = eps * eps;
    let r2 = e2 + xi * xi;
    if r2 == 0.0 {
        return f64::MAX;
    }
    r2.powf(0.5 * (p - 4.0)) * (e2 + (p - 1.0) * xi * xi)
}

/// Potential `((ε² + ξ²)^{p/2} - ε^p) / p`, zero at `ξ = 0`.
#[inline]
pub(crate) fn unit_potential(p: f64, eps: f64, xi: f64) -> f64 {
    let e2 = eps * eps;
    if e2 == 0.0 {
        return xi.abs().powf(p) / p;
    }
    // e^p ((1 + ξ²/ε²)^{p/2} - 1) / p, written to avoid cancellation
    let t = xi * xi / e2;
    e2.powf(0.5 * p) * (0.5 * p * t.ln_1p()).exp_m1() / p
}

/// `F(a) - F(b)` for the unit potential, accurate when `a ≈ b`.
#[inline]
pub(crate) fn unit_potential_diff(p: f64, eps: f64, a: f64, b: f64) -> f64 {
    let e2 = eps * eps;
    let rb = e2 + b * b;
    if rb == 0.0 {
        return unit_potential(p, eps, a);
    }
    let rel = (a - b) * (a + b) / rb;
    rb.powf(0.5 * p) * (0.5 * p * rel.ln_1p()).exp_m1() / p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_matches_finite_difference() {
        for &xi in &[-2.0f64, -0.3, 1e-3, 0.7, 5.0] {
            let h = 1e-6 * xi.abs().max(1e-3);
            let fd = (unit_flux(1.5, 1e-8, xi + h) - unit_flux(1.5, 1e-8, xi - h)) / (2.0 * h);
            let an = unit_dflux(1.5, 1e-8, xi);
            assert!((fd - an).abs() < 1e-6 * an.abs(), "{xi}: {fd} vs {an}");
        }
    }

    #[test]
    fn potential_is_antiderivative() {
        for &xi in &[-1.5, 0.01, 0.4, 3.0] {
            let h = 1e-6;
            let fd = (unit_potential(1.4, 1e-4, xi + h) - unit_potential(1.4, 1e-4, xi - h)) / (2.0 * h);
            assert!((fd - unit_flux(1.4, 1e-4, xi)).abs() < 1e-7);
        }
        assert_eq!(unit_potential(1.5, 1e-8, 0.0), 0.0);
        assert!((unit_potential(1.5, 0.0, 2.0) - 2f64.powf(1.5) / 1.5).abs() < 1e-15);
    }

    #[test]
    fn potential_difference_is_consistent() {
        for &(a, b) in &[(0.3, 0.30001), (1.0, -2.0), (1e-9, 2e-9), (4.0, 4.0)] {
            let d = unit_potential_diff(1.5, 1e-8, a, b);
            let naive = unit_potential(1.5, 1e-8, a) - unit_potential(1.5, 1e-8, b);
            assert!((d - naive).abs() < 1e-12, "{a} {b}: {d} vs {naive}");
        }
    }

    #[test]
    fn prototype_satisfies_structure() {
        let params = StructureParams::prototype(3, 1, 1.5).unwrap();
        let f = FluxModel::prototype(1.5, 1e-8);
        f.validate(&params, 2000, 7).unwrap();
        let c = f.structure_constants(2).2;
        assert!(c > 0.0 && c < 1e-11);
    }

    #[test]
    fn anisotropic_coefficients_need_matching_constants() {
        let f = FluxModel::anisotropic(1.5, 1e-8, vec![0.5, 2.0])
            .unwrap()
            .with_modulation(0.2)
            .unwrap();
        let tight = StructureParams::new(3, 1, 1.5, 0.4, 2.4, 0.0).unwrap();
        f.validate(&tight, 2000, 1).unwrap();
        let loose = StructureParams::new(3, 1, 1.5, 1.0, 1.0, 0.0).unwrap();
        assert!(f.validate(&loose, 2000, 1).is_err());
    }
}
