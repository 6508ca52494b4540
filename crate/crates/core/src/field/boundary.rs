use std::path::Path;

use super::{Grid, ScalarField};
use crate::error::{Error, Result};

/// Dirichlet values, one per boundary node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    entries: Vec<(usize, f64)>,
}

impl BoundaryData {
    /// Validates that every boundary node of `grid` is assigned exactly once.
    pub fn new(grid: &Grid, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let expected = grid.boundary_nodes();
        if entries.len() != expected.len() {
            return Err(Error::InvalidBoundary(format!(
                "{} entries for {} boundary nodes",
                entries.len(),
                expected.len()
            )));
        }
        for (e, &node) in entries.iter().zip(&expected) {
            if e.0 != node {
                return Err(Error::InvalidBoundary(format!(
                    "node {} is not covered exactly once",
                    node
                )));
            }
            if !e.1.is_finite() {
                return Err(Error::InvalidBoundary(format!("non-finite value at node {node}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.ndim()];
        let entries = grid
            .boundary_nodes()
            .into_iter()
            .map(|i| {
                grid.coords_into(i, &mut x);
                (i, f(&x))
            })
            .collect();
        Self { entries }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    /// Boundary values read from a field's boundary nodes.
    pub fn from_field(field: &ScalarField) -> Self {
        let entries = field
            .grid()
            .boundary_nodes()
            .into_iter()
            .map(|i| (i, field.values()[i]))
            .collect();
        Self { entries }
    }

    /// Reads `(node index, value)` rows; a header row is optional.
    pub fn from_csv(grid: &Grid, path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::InvalidBoundary("row with fewer than 2 columns".into()));
            }
            let (Ok(i), Ok(v)) = (rec[0].parse::<usize>(), rec[1].parse::<f64>()) else {
                if entries.is_empty() {
                    continue; // header
                }
                return Err(Error::InvalidBoundary(format!("unparsable row {:?}", rec)));
            };
            entries.push((i, v));
        }
        Self::new(grid, entries)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn min(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum::<f64>() / self.entries.len() as f64
    }

    pub fn apply(&self, field: &mut ScalarField) {
        let vals = field.values_mut();
        for &(i, v) in &self.entries {
            vals[i] = v;
        }
    }
}
