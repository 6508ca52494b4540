//! Exponent algebra for the two-exponent anisotropic class.
//!
//! The first `s` directions carry quadratic growth, the remaining `N - s`
//! directions carry `p`-growth with `1 < p < 2`. Everything downstream (the
//! intrinsic polydiscs, the boundedness exponents, the supercritical gate)
//! is a closed-form function of `(N, s, p)`.

use crate::error::{Error, Result};

/// The data `(N, s, p, C1, C2, C)` of the equation class.
///
/// `p = 2` is accepted so the closed forms can be cross-checked in the
/// degenerate limit; solver and verifier entry points call
/// [`StructureParams::require_singular`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureParams {
    n: usize,
    s: usize,
    p: f64,
    c1: f64,
    c2: f64,
    c: f64,
}

impl StructureParams {
    pub fn new(n: usize, s: usize, p: f64, c1: f64, c2: f64, c: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("N = {n} must be at least 2")));
        }
        if s < 1 || s > n - 1 {
            return Err(Error::InvalidParams(format!("s = {s} must lie in [1, {}]", n - 1)));
        }
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::InvalidParams(format!("p = {p} must lie in (1, 2]")));
        }
        if !(c1 > 0.0 && c1.is_finite()) || !(c2 > 0.0 && c2.is_finite()) {
            return Err(Error::InvalidParams("C1 and C2 must be positive".into()));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParams(format!("C = {c} must be nonnegative")));
        }
        Ok(Self { n, s, p, c1, c2, c })
    }

    /// Homogeneous prototype: `C1 = C2 = 1`, `C = 0`.
    pub fn prototype(n: usize, s: usize, p: f64) -> Result<Self> {
        Self::new(n, s, p, 1.0, 1.0, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Number of singular directions, `N - s`.
    pub fn singular_dims(&self) -> usize {
        self.n - self.s
    }

    pub fn with_c(mut self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParams(format!("C = {c} must be nonnegative")));
        }
        self.c = c;
        Ok(self)
    }

    /// Rejects the `p = 2` limit.
    pub fn require_singular(&self) -> Result<()> {
        if self.p < 2.0 {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "p",
                value: self.p,
                range: "(1, 2)",
            })
        }
    }

    /// `p̄ = 2Np / (2(N - s) + ps)`.
    pub fn harmonic_mean(&self) -> f64 {
        let (n, s) = (self.n as f64, self.s as f64);
        2.0 * n * self.p / (2.0 * (n - s) + self.p * s)
    }

    /// Sobolev exponent `N p̄ / (N - p̄)`, undefined when `p̄ = N`.
    pub fn sobolev_exponent(&self) -> Option<f64> {
        let pbar = self.harmonic_mean();
        let n = self.n as f64;
        (pbar < n).then(|| n * pbar / (n - pbar))
    }

    /// `χ = p + (N - s)(p - 2)`.
    pub fn chi(&self) -> f64 {
        self.p + (self.n - self.s) as f64 * (self.p - 2.0)
    }

    /// `λ_l = N(p̄ - 2) + l p̄` for real `l ∈ [1, 2]`.
    pub fn lambda_l(&self, l: f64) -> Result<f64> {
        if !(1.0..=2.0).contains(&l) {
            return Err(Error::OutOfRange {
                what: "l",
                value: l,
                range: "[1, 2]",
            });
        }
        let pbar = self.harmonic_mean();
        Ok(self.n as f64 * (pbar - 2.0) + l * pbar)
    }

    pub fn is_supercritical(&self) -> bool {
        self.chi() > 0.0
    }

    /// Rejects the subcritical and critical ranges for χ-gated checks.
    pub fn require_supercritical(&self) -> Result<()> {
        if self.is_supercritical() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "chi",
                value: self.chi(),
                range: "(0, inf)",
            })
        }
    }

    pub fn exponents(&self) -> ExponentTable {
        ExponentTable {
            pbar: self.harmonic_mean(),
            pbar_star: self.sobolev_exponent(),
            chi: self.chi(),
            n: self.n,
        }
    }
}

/// Snapshot of the derived exponents of one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTable {
    pub pbar: f64,
    pub pbar_star: Option<f64>,
    pub chi: f64,
    n: usize,
}

impl ExponentTable {
    pub fn lambda(&self, l: f64) -> f64 {
        self.n as f64 * (self.pbar - 2.0) + l * self.pbar
    }
}

/// Intrinsic coupling `θ = δ̄ M^{(2-p)/2} ρ^{p/2}` between the radius in the
/// nondegenerate block and the height of the solution.
pub fn intrinsic_theta(m: f64, rho: f64, p: f64, delta_bar: f64) -> f64 {
    delta_bar * m.powf((2.0 - p) / 2.0) * rho.powf(p / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicScale {
    pub m: f64,
    pub rho: f64,
    pub delta_bar: f64,
    pub theta: f64,
}

impl IntrinsicScale {
    pub fn new(m: f64, rho: f64, p: f64, delta_bar: f64) -> Result<Self> {
        if !(m > 0.0) || !(rho > 0.0) {
            return Err(Error::NonPositive(format!("M = {m}, rho = {rho}")));
        }
        if !(delta_bar > 0.0 && delta_bar <= 1.0) {
            return Err(Error::OutOfRange {
                what: "delta_bar",
                value: delta_bar,
                range: "(0, 1]",
            });
        }
        Ok(Self {
            m,
            rho,
            delta_bar,
            theta: intrinsic_theta(m, rho, p, delta_bar),
        })
    }
}
