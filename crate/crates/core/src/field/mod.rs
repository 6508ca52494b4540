//! Discrete scalar fields on rectangular grids.

mod boundary;
mod grid;
pub mod io;

pub use boundary::BoundaryData;
pub use grid::Grid;

use crate::error::{Error, Result};

/// Sign selector for truncations `(u - k)_±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite field value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.ndim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.coords_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `‖u‖_∞` over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Forward differences along `axis` (0-based), located on cell faces.
    pub fn partial(&self, axis: usize) -> Result<ScalarField> {
        if axis >= self.grid.ndim() {
            return Err(Error::OutOfRange {
                what: "axis",
                value: axis as f64,
                range: "[0, N)",
            });
        }
        let faces = self.grid.staggered(axis)?;
        let stride = self.grid.strides()[axis];
        let h = self.grid.spacing()[axis];
        let mut values = Vec::with_capacity(faces.len());
        let mut multi;
        for f in 0..faces.len() {
            multi = faces.multi_index(f);
            let lo = self.grid.flat_index(&multi);
            values.push((self.values[lo + stride] - self.values[lo]) / h);
        }
        Ok(ScalarField { grid: faces, values })
    }

    /// Nodewise `max(±(u - k), 0)`.
    pub fn truncate(&self, k: f64, sign: Sign) -> ScalarField {
        let s = sign.as_f64();
        self.map(|v| (s * (v - k)).max(0.0))
    }

    /// Multilinear interpolation at `x`; `None` outside the grid box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let g = &self.grid;
        let n = g.ndim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let t = (x[a] - g.origin()[a]) / g.spacing()[a];
            let last = (g.dims()[a] - 1) as f64;
            let slack = 1e-9;
            if t < -slack || t > last + slack {
                return None;
            }
            let t = t.clamp(0.0, last);
            let k = (t.floor() as usize).min(g.dims()[a] - 2);
            base[a] = k;
            frac[a] = t - k as f64;
        }
        // written relative to the base corner so constants are reproduced exactly
        let base_idx: usize = (0..n).map(|a| base[a] * g.strides()[a]).sum();
        let v0 = self.values[base_idx];
        let mut acc = 0.0;
        for corner in 1..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..n {
                let bit = (corner >> a) & 1;
                let fa = frac[a];
                if bit == 1 {
                    w *= fa;
                } else {
                    w *= 1.0 - fa;
                }
                idx += (base[a] + bit) * g.strides()[a];
            }
            if w != 0.0 {
                acc += w * (self.values[idx] - v0);
            }
        }
        Some(v0 + acc)
    }
}
