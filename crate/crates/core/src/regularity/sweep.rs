use rayon::prelude::*;

use super::checks::{expansion_check, harnack_estimate, l1_linf_check, sup_bound_check};
use super::report::RegularityReport;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::SplitPoint;
use crate::params::{intrinsic_theta, StructureParams};

/// Base points × radii × `δ̄` values; evaluated in that nesting order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSweep {
    pub radii: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub delta_bars: Vec<f64>,
}

impl ScaleSweep {
    pub fn new(radii: Vec<f64>, points: Vec<Vec<f64>>, delta_bars: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || points.is_empty() || delta_bars.is_empty() {
            return Err(Error::EmptySet("sweep"));
        }
        if radii.iter().chain(&delta_bars).any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::NonPositive("sweep radii and delta_bar values".into()));
        }
        Ok(Self {
            radii,
            points,
            delta_bars,
        })
    }

    /// `2^{-j}` for `j` in `first..=last`.
    pub fn dyadic(first: i32, last: i32) -> Vec<f64> {
        (first..=last).map(|j| 2f64.powi(-j)).collect()
    }

    /// Cartesian product `values^n`.
    pub fn lattice(values: &[f64], n: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|pre| {
                    values.iter().map(move |&v| {
                        let mut q = pre.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn keys(&self) -> Vec<(usize, usize, usize)> {
        let mut k = Vec::new();
        for i in 0..self.points.len() {
            for j in 0..self.radii.len() {
                for d in 0..self.delta_bars.len() {
                    k.push((i, j, d));
                }
            }
        }
        k
    }

    fn run<F>(&self, u: &ScalarField, check: &'static str, f: F) -> Result<Vec<RegularityReport>>
    where
        F: Fn(&SplitPoint, f64, f64) -> Result<RegularityReport> + Sync,
    {
        let s = u.grid().split();
        self.keys()
            .into_par_iter()
            .map(|(i, j, d)| {
                let x = SplitPoint::from_coords(&self.points[i], s)?;
                let (rho, db) = (self.radii[j], self.delta_bars[d]);
                match f(&x, rho, db) {
                    Err(Error::NotContained(_)) | Err(Error::EmptyRegion) => {
                        let mut r = RegularityReport::vacuous(check, self.points[i].clone());
                        r.scales = vec![("rho", rho), ("delta_bar", db)];
                        Ok(r)
                    }
                    other => other,
                }
            })
            .collect()
    }
}

/// Harnack estimates at every key; keys violating the containment
/// hypothesis give vacuous reports.
pub fn harnack_sweep(u: &ScalarField, params: &StructureParams, sweep: &ScaleSweep) -> Result<Vec<RegularityReport>> {
    sweep.run(u, "harnack", |x, rho, db| harnack_estimate(u, params, x, rho, db))
}

fn intrinsic_at(u: &ScalarField, x: &SplitPoint, rho: f64, p: f64, db: f64) -> Result<f64> {
    let m = u
        .interpolate(&x.coords())
        .ok_or_else(|| Error::NotContained("sweep point outside grid".into()))?;
    if !(m > 0.0) {
        return Err(Error::NonPositive(format!("u = {m} at sweep point")));
    }
    Ok(intrinsic_theta(m, rho, p, db))
}

/// Sup bounds with `θ = δ̄ u(x)^{(2-p)/2} ρ^{p/2}`.
pub fn sup_bound_sweep(
    u: &ScalarField,
    params: &StructureParams,
    sweep: &ScaleSweep,
    l: f64,
) -> Result<Vec<RegularityReport>> {
    let p = params.p();
    sweep.run(u, "supbound", |x, rho, db| {
        let theta = intrinsic_at(u, x, rho, p, db)?;
        let mut r = sup_bound_check(u, params, x, theta, rho, l)?;
        r.scales.push(("delta_bar", db));
        Ok(r)
    })
}

/// L¹–L^∞ estimates with `θ = δ̄ u(x)^{(2-p)/2} ρ^{p/2}`.
pub fn l1_linf_sweep(u: &ScalarField, params: &StructureParams, sweep: &ScaleSweep) -> Result<Vec<RegularityReport>> {
    let p = params.p();
    sweep.run(u, "l1linf", |x, rho, db| {
        let theta = intrinsic_at(u, x, rho, p, db)?;
        let mut r = l1_linf_check(u, params, x, theta, rho)?;
        r.scales.push(("delta_bar", db));
        Ok(r)
    })
}

/// Expansion checks with `M` the median of all nodal values.
pub fn expansion_sweep(
    u: &ScalarField,
    params: &StructureParams,
    sweep: &ScaleSweep,
    nu: f64,
    delta: f64,
    k_alt: f64,
) -> Result<Vec<RegularityReport>> {
    let mut v = u.values().to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    sweep.run(u, "expansion", |x, rho, _| {
        expansion_check(u, params, x, median, rho, nu, delta, k_alt)
    })
}

/// For each base point, `max/min` of `constant` over the two smallest radii
/// in `reports`, when both are admissible and positive.
pub fn stability_ratios(reports: &[RegularityReport], constant: &str) -> Vec<(Vec<f64>, f64)> {
    let mut radii: Vec<f64> = reports.iter().filter_map(|r| r.scale("rho")).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    if radii.len() < 2 {
        return Vec::new();
    }
    let (r0, r1) = (radii[0], radii[1]);
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for r in reports {
        if !centers.contains(&r.center) {
            centers.push(r.center.clone());
        }
    }
    centers
        .into_iter()
        .filter_map(|c| {
            let pick = |rho: f64| {
                reports
                    .iter()
                    .find(|r| r.center == c && r.scale("rho") == Some(rho) && r.hypothesis)
                    .and_then(|r| r.constant(constant))
                    .filter(|v| *v > 0.0)
            };
            let (a, b) = (pick(r0)?, pick(r1)?);
            Some((c, a.max(b) / a.min(b)))
        })
        .collect()
}
