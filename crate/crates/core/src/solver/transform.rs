use super::flux::FluxModel;
use super::operator::Operator;
use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField};
use crate::geometry::{Polydisc, SplitPoint};
use crate::params::StructureParams;

/// Nodes per axis of the resampled unit polydisc grid.
pub const RESAMPLE_NODES: usize = 33;

/// `v(y', y'') = u(x_o' + θ y', x_o'' + ρ y'') / u(x_o)`.
///
/// `v` solves `Δ' v + a Σ_{i>s} ∂_i Ã(∂_i v) = 0` with
/// `a = u(x_o)^{p-2} θ² / ρ^p` and regularization `ε ρ / u(x_o)`.
#[derive(Debug, Clone)]
pub struct Normalized {
    /// `v` multilinearly resampled on `[-1, 1]^N`.
    pub v: ScalarField,
    /// The original nodes of the closed bounding box in `y` coordinates.
    pub native: ScalarField,
    pub c_tilde: f64,
    pub scale: f64,
    pub theta: f64,
    pub rho: f64,
    pub coefficient: f64,
}

impl Normalized {
    /// Max residual of `v` under the transformed operator on the native
    /// nodes, multiplied by `u(x_o) / θ²` to undo the change of variables.
    pub fn rescaled_residual(&self, flux: &FluxModel) -> Result<f64> {
        let g = self.native.grid();
        if g.dims().iter().any(|&d| d < 3) {
            return Err(Error::EmptyRegion);
        }
        let eps = flux.eps() * self.rho / self.scale;
        let tf = flux.scaled(self.coefficient).with_eps(eps);
        let op = Operator::new(g, &tf);
        Ok(op.residual_max(self.native.values(), None) * self.scale / (self.theta * self.theta))
    }
}

pub fn normalize_transform(
    u: &ScalarField,
    x_o: &SplitPoint,
    theta: f64,
    rho: f64,
    params: &StructureParams,
) -> Result<Normalized> {
    let g = u.grid();
    let s = g.split();
    if x_o.s() != s || x_o.ndim() != g.ndim() {
        return Err(Error::SplitMismatch {
            expected: s,
            found: x_o.s(),
        });
    }
    let q = Polydisc::new(x_o.clone(), theta, rho)?;
    let (lo, hi) = q.bounding_box();
    if !g.contains_box(&lo, &hi) {
        return Err(Error::NotContained(format!(
            "Q({theta}, {rho}) around {:?}",
            x_o.coords()
        )));
    }
    let center = x_o.coords();
    let scale = u
        .interpolate(&center)
        .ok_or_else(|| Error::NotContained("center".into()))?;
    if !(scale > 0.0) {
        return Err(Error::NonPositive(format!("u(x_o) = {scale}")));
    }
    let n = g.ndim();
    let radius = |a: usize| if a < s { theta } else { rho };

    let unit = Grid::on_box(&vec![RESAMPLE_NODES; n], &vec![-1.0; n], &vec![1.0; n], s, g.p())?;
    let mut x = vec![0.0; n];
    let mut values = Vec::with_capacity(unit.len());
    for i in 0..unit.len() {
        for (a, xa) in x.iter_mut().enumerate() {
            *xa = center[a] + radius(a) * unit.coord(i, a);
        }
        let w = u.interpolate(&x).ok_or_else(|| Error::NotContained(format!("{x:?}")))?;
        values.push(w / scale);
    }
    let v = ScalarField::new(unit, values)?;

    let mut first = Vec::with_capacity(n);
    let mut dims = Vec::with_capacity(n);
    for a in 0..n {
        let h = g.spacing()[a];
        let last_node = (g.dims()[a] - 1) as f64;
        let i0 = ((lo[a] - g.origin()[a]) / h - 1e-9).ceil().clamp(0.0, last_node) as usize;
        let i1 = ((hi[a] - g.origin()[a]) / h + 1e-9).floor().clamp(0.0, last_node) as usize;
        if i1 <= i0 {
            return Err(Error::EmptyRegion);
        }
        first.push(i0);
        dims.push(i1 - i0 + 1);
    }
    let spacing: Vec<f64> = (0..n).map(|a| g.spacing()[a] / radius(a)).collect();
    let origin: Vec<f64> = (0..n)
        .map(|a| (g.origin()[a] + first[a] as f64 * g.spacing()[a] - center[a]) / radius(a))
        .collect();
    let sub = Grid::new(dims, spacing, origin, s, g.p())?;
    let mut values = Vec::with_capacity(sub.len());
    let mut multi = vec![0; n];
    for i in 0..sub.len() {
        for a in 0..n {
            multi[a] = first[a] + sub.axis_index(i, a);
        }
        values.push(u.values()[g.flat_index(&multi)] / scale);
    }
    let native = ScalarField::new(sub, values)?;

    let p = g.p();
    Ok(Normalized {
        v,
        native,
        c_tilde: params.c() * rho / scale,
        scale,
        theta,
        rho,
        coefficient: scale.powf(p - 2.0) * theta * theta / rho.powf(p),
    })
}
