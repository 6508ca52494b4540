//! The discrete operator: face-centered differences, face fluxes, their
//! divergence, and the matching cell-weighted energy.
//!
//! For an edge from node `i` to `i + e_a` the face slope is
//! `ξ = (u[i + e_a] - u[i]) / h_a`. The divergence at an interior node is
//! `Σ_a (A(ξ_{k+½}) - A(ξ_{k-½})) / h_a`, which is exactly `-1/vol` times the
//! gradient of the energy `vol Σ_edges w_e F(ξ_e)`: every edge touching an
//! interior node has weight one.

use rayon::prelude::*;

use super::flux::{unit_dflux, unit_flux, unit_potential, unit_potential_diff, FluxModel};
use crate::field::Grid;
use crate::util::{det_max, det_sum};

#[derive(Debug, Clone)]
enum AxisKind {
    Quadratic,
    Const(f64),
    PerEdge(Vec<f64>),
}

#[derive(Debug, Clone)]
pub(crate) struct Operator {
    grid: Grid,
    p: f64,
    eps: f64,
    axes: Vec<AxisKind>,
    interior: Vec<bool>,
    red: Vec<usize>,
    black: Vec<usize>,
}

impl Operator {
    pub(crate) fn new(grid: &Grid, flux: &FluxModel) -> Self {
        let n = grid.ndim();
        let s = grid.split();
        let axes = (0..n)
            .map(|a| {
                if a < s {
                    AxisKind::Quadratic
                } else if flux.is_homogeneous_in_x() {
                    AxisKind::Const(flux.coefficient(a - s, &[]))
                } else {
                    let h = grid.spacing()[a];
                    let mut x = vec![0.0; n];
                    let coef = (0..grid.len())
                        .map(|i| {
                            grid.coords_into(i, &mut x);
                            x[a] += 0.5 * h;
                            flux.coefficient(a - s, &x)
                        })
                        .collect();
                    AxisKind::PerEdge(coef)
                }
            })
            .collect();
        let interior: Vec<bool> = (0..grid.len()).map(|i| !grid.is_boundary(i)).collect();
        let (mut red, mut black) = (Vec::new(), Vec::new());
        for i in (0..grid.len()).filter(|&i| interior[i]) {
            let parity: usize = grid.multi_index(i).iter().sum();
            if parity.is_multiple_of(2) {
                red.push(i);
            } else {
                black.push(i);
            }
        }
        Self {
            grid: grid.clone(),
            p: flux.p(),
            eps: flux.eps(),
            axes,
            interior,
            red,
            black,
        }
    }

    pub(crate) fn grid(&self) -> &Grid {
        &self.grid
    }

    pub(crate) fn colors(&self) -> [&[usize]; 2] {
        [&self.red, &self.black]
    }

    #[inline]
    fn coef(&self, axis: usize, lower: usize) -> Option<f64> {
        match &self.axes[axis] {
            AxisKind::Quadratic => None,
            AxisKind::Const(c) => Some(*c),
            AxisKind::PerEdge(v) => Some(v[lower]),
        }
    }

    #[inline]
    pub(crate) fn edge_flux(&self, axis: usize, lower: usize, xi: f64) -> f64 {
        match self.coef(axis, lower) {
            None => xi,
            Some(c) => c * unit_flux(self.p, self.eps, xi),
        }
    }

    #[inline]
    pub(crate) fn edge_dflux(&self, axis: usize, lower: usize, xi: f64) -> f64 {
        match self.coef(axis, lower) {
            None => 1.0,
            Some(c) => c * unit_dflux(self.p, self.eps, xi),
        }
    }

    #[inline]
    fn edge_potential(&self, axis: usize, lower: usize, xi: f64) -> f64 {
        match self.coef(axis, lower) {
            None => 0.5 * xi * xi,
            Some(c) => c * unit_potential(self.p, self.eps, xi),
        }
    }

    #[inline]
    fn edge_potential_diff(&self, axis: usize, lower: usize, a: f64, b: f64) -> f64 {
        match self.coef(axis, lower) {
            None => 0.5 * (a - b) * (a + b),
            Some(c) => c * unit_potential_diff(self.p, self.eps, a, b),
        }
    }

    #[inline]
    fn has_upper(&self, i: usize, axis: usize) -> bool {
        self.grid.axis_index(i, axis) + 1 < self.grid.dims()[axis]
    }

    /// Share of the edge `(i, i + e_axis)` in the cell sum: the product over
    /// the other axes of (adjacent cells) / 2.
    fn edge_weight(&self, i: usize, axis: usize) -> f64 {
        let mut w = 1.0;
        for b in 0..self.grid.ndim() {
            if b == axis {
                continue;
            }
            let k = self.grid.axis_index(i, b);
            let d = self.grid.dims()[b];
            if k == 0 || k + 1 == d {
                w *= 0.5;
            }
        }
        w
    }

    /// Discrete divergence of the face fluxes at interior node `k`.
    #[inline]
    pub(crate) fn divergence_at(&self, u: &[f64], k: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.grid.ndim() {
            let st = self.grid.strides()[a];
            let h = self.grid.spacing()[a];
            let up = self.edge_flux(a, k, (u[k + st] - u[k]) / h);
            let dn = self.edge_flux(a, k - st, (u[k] - u[k - st]) / h);
            acc += (up - dn) / h;
        }
        acc
    }

    /// `div A(Du) - f` at interior nodes, zero on the boundary.
    pub(crate) fn residual(&self, u: &[f64], forcing: Option<&[f64]>) -> Vec<f64> {
        (0..u.len())
            .into_par_iter()
            .map(|k| {
                if !self.interior[k] {
                    return 0.0;
                }
                let f = forcing.map_or(0.0, |f| f[k]);
                self.divergence_at(u, k) - f
            })
            .collect()
    }

    pub(crate) fn residual_max(&self, u: &[f64], forcing: Option<&[f64]>) -> f64 {
        det_max(u.len(), |k| {
            if !self.interior[k] {
                return 0.0;
            }
            let f = forcing.map_or(0.0, |f| f[k]);
            (self.divergence_at(u, k) - f).abs()
        })
    }

    /// Cell-weighted energy with the regularized potential.
    pub(crate) fn energy(&self, u: &[f64]) -> f64 {
        let vol = self.grid.cell_volume();
        vol * det_sum(u.len(), |i| {
            let mut e = 0.0;
            for a in 0..self.grid.ndim() {
                if self.has_upper(i, a) {
                    let st = self.grid.strides()[a];
                    let xi = (u[i + st] - u[i]) / self.grid.spacing()[a];
                    e += self.edge_weight(i, a) * self.edge_potential(a, i, xi);
                }
            }
            e
        })
    }

    /// `energy(u) + vol Σ_interior f u`, the functional whose critical
    /// points solve `div A(Du) = f`.
    pub(crate) fn functional(&self, u: &[f64], forcing: Option<&[f64]>) -> f64 {
        let mut j = self.energy(u);
        if let Some(f) = forcing {
            let vol = self.grid.cell_volume();
            j += vol * det_sum(u.len(), |k| if self.interior[k] { f[k] * u[k] } else { 0.0 });
        }
        j
    }

    /// `functional(u + du) - functional(u)`, summed edge by edge.
    pub(crate) fn functional_change(&self, u: &[f64], du: &[f64], forcing: Option<&[f64]>) -> f64 {
        let vol = self.grid.cell_volume();
        vol * det_sum(u.len(), |i| {
            let mut e = 0.0;
            for a in 0..self.grid.ndim() {
                if self.has_upper(i, a) {
                    let st = self.grid.strides()[a];
                    let h = self.grid.spacing()[a];
                    let d = du[i + st] - du[i];
                    if d == 0.0 {
                        continue;
                    }
                    let old = (u[i + st] - u[i]) / h;
                    let new = (u[i + st] + du[i + st] - u[i] - du[i]) / h;
                    e += self.edge_weight(i, a) * self.edge_potential_diff(a, i, new, old);
                }
            }
            if let Some(f) = forcing {
                if self.interior[i] {
                    e += f[i] * du[i];
                }
            }
            e
        })
    }

    /// `vol Σ_edges A(ξ_u) (ψ_j - ψ_i)/h`.
    pub(crate) fn weak_form(&self, u: &[f64], psi: &[f64]) -> f64 {
        let vol = self.grid.cell_volume();
        vol * det_sum(u.len(), |i| {
            let mut e = 0.0;
            for a in 0..self.grid.ndim() {
                if self.has_upper(i, a) {
                    let st = self.grid.strides()[a];
                    let h = self.grid.spacing()[a];
                    let dpsi = (psi[i + st] - psi[i]) / h;
                    if dpsi != 0.0 {
                        e += self.edge_flux(a, i, (u[i + st] - u[i]) / h) * dpsi;
                    }
                }
            }
            e
        })
    }

    /// `A(ξ)/ξ`: curvature of the quadratic that touches the energy at `ξ`
    /// and lies above it, since the potential is concave in `ξ²` for `p ≤ 2`.
    #[inline]
    fn edge_secant(&self, axis: usize, lower: usize, xi: f64) -> f64 {
        match self.coef(axis, lower) {
            None => 1.0,
            Some(c) => {
                let r2 = (self.eps * self.eps + xi * xi).max(f64::MIN_POSITIVE);
                c * r2.powf(0.5 * (self.p - 2.0))
            }
        }
    }

    /// `A(ξ)/ξ` on every face, indexed `[axis][lower node]`.
    pub(crate) fn face_secant(&self, u: &[f64]) -> Vec<Vec<f64>> {
        (0..self.grid.ndim())
            .map(|a| {
                let st = self.grid.strides()[a];
                let h = self.grid.spacing()[a];
                (0..u.len())
                    .into_par_iter()
                    .map(|i| {
                        if self.has_upper(i, a) {
                            self.edge_secant(a, i, (u[i + st] - u[i]) / h)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// The weighted Laplacian `Σ_a D_a^T (w_a D_a v)` at interior nodes for
    /// `v` vanishing on the boundary.
    pub(crate) fn weighted_apply(&self, w: &[Vec<f64>], v: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            if !self.interior[k] {
                *o = 0.0;
                return;
            }
            let mut acc = 0.0;
            for (a, wa) in w.iter().enumerate() {
                let st = self.grid.strides()[a];
                let h2 = self.grid.spacing()[a].powi(2);
                acc += (wa[k] * (v[k] - v[k + st]) + wa[k - st] * (v[k] - v[k - st])) / h2;
            }
            *o = acc;
        });
    }

    pub(crate) fn weighted_diag(&self, w: &[Vec<f64>]) -> Vec<f64> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|k| {
                if !self.interior[k] {
                    return 1.0;
                }
                let mut acc = 0.0;
                for (a, wa) in w.iter().enumerate() {
                    let st = self.grid.strides()[a];
                    let h2 = self.grid.spacing()[a].powi(2);
                    acc += (wa[k] + wa[k - st]) / h2;
                }
                acc
            })
            .collect()
    }

    /// `(-div + f, d/dt)` at node `k` with `u[k]` replaced by `t`.
    #[inline]
    fn node_gradient(&self, u: &[f64], k: usize, t: f64, f: f64) -> (f64, f64) {
        let (mut g, mut dg) = (f, 0.0);
        for a in 0..self.grid.ndim() {
            let st = self.grid.strides()[a];
            let h = self.grid.spacing()[a];
            let lo = (t - u[k - st]) / h;
            let hi = (u[k + st] - t) / h;
            g += (self.edge_flux(a, k - st, lo) - self.edge_flux(a, k, hi)) / h;
            dg += (self.edge_dflux(a, k - st, lo) + self.edge_dflux(a, k, hi)) / (h * h);
        }
        (g, dg)
    }

    /// Minimizes the functional in the single coordinate `k`.
    pub(crate) fn relax_node(&self, u: &[f64], k: usize, f: f64, gtol: f64) -> f64 {
        let t0 = u[k];
        let (g0, _) = self.node_gradient(u, k, t0, f);
        if g0.abs() <= gtol {
            return t0;
        }
        let mut nb_lo = f64::INFINITY;
        let mut nb_hi = f64::NEG_INFINITY;
        for a in 0..self.grid.ndim() {
            let st = self.grid.strides()[a];
            nb_lo = nb_lo.min(u[k - st]).min(u[k + st]);
            nb_hi = nb_hi.max(u[k - st]).max(u[k + st]);
        }
        let span = (nb_hi - nb_lo).max(1e-12 * (1.0 + t0.abs()));
        // g is increasing in t; bracket the root
        let (mut lo, mut hi);
        if g0 > 0.0 {
            hi = t0;
            let mut step = (t0 - nb_lo).max(span);
            lo = t0 - step;
            while self.node_gradient(u, k, lo, f).0 > 0.0 {
                step *= 2.0;
                lo = t0 - step;
                if !lo.is_finite() {
                    return t0;
                }
            }
        } else {
            lo = t0;
            let mut step = (nb_hi - t0).max(span);
            hi = t0 + step;
            while self.node_gradient(u, k, hi, f).0 < 0.0 {
                step *= 2.0;
                hi = t0 + step;
                if !hi.is_finite() {
                    return t0;
                }
            }
        }
        let mut t = t0;
        for _ in 0..100 {
            let (g, dg) = self.node_gradient(u, k, t, f);
            if g.abs() <= gtol {
                break;
            }
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - g / dg;
            t = if newton > lo && newton < hi && dg.is_finite() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * (lo.abs() + hi.abs()) {
                break;
            }
        }
        t
    }

    /// One red-black nonlinear Gauss-Seidel pass over the interior.
    pub(crate) fn gauss_seidel_sweep(&self, u: &mut [f64], forcing: Option<&[f64]>, gtol: f64, black_first: bool) {
        let mut colors = self.colors();
        if black_first {
            colors.swap(0, 1);
        }
        for color in colors {
            let updates: Vec<f64> = {
                let uref: &[f64] = u;
                color
                    .par_iter()
                    .map(|&k| self.relax_node(uref, k, forcing.map_or(0.0, |f| f[k]), gtol))
                    .collect()
            };
            for (&k, v) in color.iter().zip(updates) {
                u[k] = v;
            }
        }
    }
}
