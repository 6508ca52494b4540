use crate::error::{Error, Result};

/// Rectangular node grid with uniform spacing per axis.
///
/// Node values are stored row-major with the last axis fastest. The grid also
/// carries the split index `s` and exponent `p` of the equation it belongs
/// to, since both travel with persisted fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    strides: Vec<usize>,
    split: usize,
    p: f64,
}

impl Grid {
    pub fn new(dims: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>, split: usize, p: f64) -> Result<Self> {
        let n = dims.len();
        if n < 2 || spacing.len() != n || origin.len() != n {
            return Err(Error::InvalidGrid(format!(
                "dims/spacing/origin lengths {}/{}/{} must agree and be >= 2",
                n,
                spacing.len(),
                origin.len()
            )));
        }
        if split < 1 || split > n - 1 {
            return Err(Error::InvalidGrid(format!("split {split} outside [1, {}]", n - 1)));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidGrid(format!("axis with {d} nodes")));
        }
        if spacing.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidGrid("spacings must be positive".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidGrid(format!("exponent {p}")));
        }
        let mut strides = vec![1; n];
        for a in (0..n - 1).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            strides,
            split,
            p,
        })
    }

    /// Grid spanning the box `[lo, hi]` with `dims[a]` nodes on axis `a`.
    pub fn on_box(dims: &[usize], lo: &[f64], hi: &[f64], split: usize, p: f64) -> Result<Self> {
        if lo.len() != dims.len() || hi.len() != dims.len() {
            return Err(Error::InvalidGrid("box corner length mismatch".into()));
        }
        let spacing = dims
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&d, (&a, &b))| (b - a) / (d.max(2) - 1) as f64)
            .collect();
        Self::new(dims.to_vec(), spacing, lo.to_vec(), split, p)
    }

    /// Unit box `[0, 1]^N` with `nodes` nodes per axis.
    pub fn unit(n: usize, nodes: usize, split: usize, p: f64) -> Result<Self> {
        Self::on_box(&vec![nodes; n], &vec![0.0; n], &vec![1.0; n], split, p)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
    pub fn split(&self) -> usize {
        self.split
    }
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.ndim())
            .map(|a| self.origin[a] + self.spacing[a] * (self.dims[a] - 1) as f64)
            .collect()
    }

    pub fn coord(&self, idx: usize, axis: usize) -> f64 {
        let k = (idx / self.strides[axis]) % self.dims[axis];
        self.origin[axis] + self.spacing[axis] * k as f64
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        (0..self.ndim()).map(|a| self.coord(idx, a)).collect()
    }

    pub fn coords_into(&self, idx: usize, out: &mut [f64]) {
        for (a, x) in out.iter_mut().enumerate() {
            *x = self.coord(idx, a);
        }
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        (0..self.ndim())
            .map(|a| (idx / self.strides[a]) % self.dims[a])
            .collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    /// Position of `idx` along `axis`.
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.strides[axis]) % self.dims[axis]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        (0..self.ndim()).any(|a| {
            let k = self.axis_index(idx, a);
            k == 0 || k + 1 == self.dims[a]
        })
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_boundary(i)).collect()
    }

    /// Nodes whose coordinates lie in the closed box `[lo, hi]`.
    pub fn nodes_in_box(&self, lo: &[f64], hi: &[f64]) -> Vec<usize> {
        let n = self.ndim();
        let mut ranges = Vec::with_capacity(n);
        for a in 0..n {
            let h = self.spacing[a];
            let first = ((lo[a] - self.origin[a]) / h).ceil().max(0.0);
            let last = ((hi[a] - self.origin[a]) / h).floor();
            let last = last.min((self.dims[a] - 1) as f64);
            if last < first {
                return Vec::new();
            }
            ranges.push((first as usize, last as usize));
        }
        let mut out = Vec::new();
        let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(self.flat_index(&multi));
            let mut a = n;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if multi[a] < ranges[a].1 {
                    multi[a] += 1;
                    break;
                }
                multi[a] = ranges[a].0;
            }
        }
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let multi: Vec<usize> = (0..self.ndim())
            .map(|a| {
                let t = ((x[a] - self.origin[a]) / self.spacing[a]).round();
                t.clamp(0.0, (self.dims[a] - 1) as f64) as usize
            })
            .collect();
        self.flat_index(&multi)
    }

    /// Whether the closed box `[lo, hi]` lies inside the grid domain, up to a
    /// relative slack of `1e-12` of the spacing.
    pub fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        let up = self.upper();
        (0..self.ndim()).all(|a| {
            let tol = 1e-12 * self.spacing[a];
            lo[a] >= self.origin[a] - tol && hi[a] <= up[a] + tol
        })
    }

    /// Same node layout, shifted by half a cell along `axis` and one node
    /// shorter: the locations of forward differences.
    pub fn staggered(&self, axis: usize) -> Result<Self> {
        if self.dims[axis] < 3 {
            return Err(Error::InvalidGrid("staggered grid needs >= 3 nodes".into()));
        }
        let mut dims = self.dims.clone();
        dims[axis] -= 1;
        let mut origin = self.origin.clone();
        origin[axis] += 0.5 * self.spacing[axis];
        Self::new(dims, self.spacing.clone(), origin, self.split, self.p)
    }
}
