use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::RegularityReport;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{region_nodes, twop_dist, Polydisc, SplitPoint};
use crate::params::StructureParams;
use crate::util::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// Independent pairs of region nodes.
    Mixed,
    /// Pairs sharing their first `s` coordinates.
    DoublePrimeOnly,
}

/// Fit of `|u(x) - u(y)| ≤ γ ‖u‖ (D(x, y) / R)^α` with
/// `D = |x'-y'|^{2/p} ‖u‖^{(p-2)/p} + |x''-y''|` and `R` the
/// (2,p)-distance from the region to the boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit {
    /// `None` when `u` is constant on the region. The least-squares slope
    /// capped at 1.
    pub alpha: Option<f64>,
    /// Uncapped least-squares slope.
    pub slope: f64,
    /// Smallest `γ` for which every sampled pair satisfies the bound at `alpha`.
    pub gamma: f64,
    pub r2: f64,
    pub pairs: usize,
    pub sup_norm: f64,
    pub dist: f64,
    pub max_diff: f64,
    /// `p/2`, shown next to `alpha` for comparison.
    pub candidate: f64,
    region: Polydisc,
    p: f64,
}

impl HolderFit {
    fn ratio(&self, u: &ScalarField, x: usize, y: usize) -> Option<f64> {
        let alpha = self.alpha?;
        let g = u.grid();
        let d = intrinsic_distance(&g.coords(x), &g.coords(y), g.split(), self.sup_norm, self.p) / self.dist;
        let du = (u.values()[x] - u.values()[y]).abs();
        Some(if du == 0.0 {
            0.0
        } else {
            du / (self.sup_norm * d.powf(alpha))
        })
    }

    /// Number of fresh pairs violating the bound with `γ` inflated by `slack`.
    pub fn violations(&self, u: &ScalarField, pairs: usize, seed: u64, mode: PairMode, slack: f64) -> Result<usize> {
        let nodes = region_nodes(u, &self.region);
        let sample = sample_pairs(u, &nodes, pairs, seed, mode)?;
        Ok(match self.alpha {
            None => sample.iter().filter(|&&(x, y)| u.values()[x] != u.values()[y]).count(),
            Some(_) => sample
                .iter()
                .filter(|&&(x, y)| self.ratio(u, x, y).unwrap() > slack * self.gamma)
                .count(),
        })
    }

    pub fn report(&self) -> RegularityReport {
        let mut rep = RegularityReport::new("holder", self.region.center.coords());
        rep.constants = vec![
            ("alpha", self.alpha.unwrap_or(f64::NAN)),
            ("slope", self.slope),
            ("gamma", self.gamma),
            ("r2", self.r2),
            ("p_over_2", self.candidate),
            ("max_diff", self.max_diff),
        ];
        rep.scales = vec![
            ("theta", self.region.theta),
            ("rho", self.region.rho),
            ("dist", self.dist),
            ("pairs", self.pairs as f64),
        ];
        rep.pass = self.gamma.is_finite() && self.alpha.is_none_or(|a| a > 0.0 && a <= 1.0);
        rep
    }
}

fn intrinsic_distance(x: &[f64], y: &[f64], s: usize, sup: f64, p: f64) -> f64 {
    let dp = crate::geometry::euclid(&x[..s], &y[..s]);
    let dpp = crate::geometry::euclid(&x[s..], &y[s..]);
    dp.powf(2.0 / p) * sup.powf((p - 2.0) / p) + dpp
}

fn sample_pairs(
    u: &ScalarField,
    nodes: &[usize],
    count: usize,
    seed: u64,
    mode: PairMode,
) -> Result<Vec<(usize, usize)>> {
    if nodes.len() < 2 {
        return Err(Error::EmptyRegion);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = u.grid();
    let s = g.split();
    let slab = g.strides()[s - 1];
    let mut out = Vec::with_capacity(count);
    match mode {
        PairMode::Mixed => {
            while out.len() < count {
                let x = *nodes.choose(&mut rng).unwrap();
                let y = *nodes.choose(&mut rng).unwrap();
                if x != y {
                    out.push((x, y));
                }
            }
        }
        PairMode::DoublePrimeOnly => {
            // group by prime part; nodes are sorted, so groups are contiguous
            let mut groups: Vec<&[usize]> = Vec::new();
            let mut start = 0;
            for k in 1..=nodes.len() {
                if k == nodes.len() || nodes[k] / slab != nodes[start] / slab {
                    if k - start >= 2 {
                        groups.push(&nodes[start..k]);
                    }
                    start = k;
                }
            }
            if groups.is_empty() {
                return Err(Error::EmptyRegion);
            }
            while out.len() < count {
                let grp = groups.choose(&mut rng).unwrap();
                let x = *grp.choose(&mut rng).unwrap();
                let y = *grp.choose(&mut rng).unwrap();
                if x != y {
                    out.push((x, y));
                }
            }
        }
    }
    Ok(out)
}

/// Samples `pair_count` node pairs in `region`, fits `α` by least squares
/// on `log|Δu|` against `log(D/R)` (capped at 1), then sets `γ` to the
/// largest observed ratio at that exponent.
pub fn holder_fit(
    u: &ScalarField,
    params: &StructureParams,
    region: &Polydisc,
    pair_count: usize,
    seed: u64,
    mode: PairMode,
) -> Result<HolderFit> {
    let g = u.grid();
    if region.center.s() != g.split() || region.center.ndim() != g.ndim() {
        return Err(Error::SplitMismatch {
            expected: g.split(),
            found: region.center.s(),
        });
    }
    if pair_count < 100 {
        return Err(Error::OutOfRange {
            what: "pair_count",
            value: pair_count as f64,
            range: "[100, inf)",
        });
    }
    let (lo, hi) = region.bounding_box();
    let interior = (0..g.ndim()).all(|a| lo[a] > g.origin()[a] && hi[a] < g.upper()[a]);
    if !interior {
        return Err(Error::NotContained(
            "Hölder region must lie strictly inside the grid".into(),
        ));
    }
    let p = params.p();
    let s = g.split();
    let nodes = region_nodes(u, region);
    let sup = u.sup_norm();
    let candidate = p / 2.0;
    let vals = u.values();
    let (rmin, rmax) = nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| {
        (a.min(vals[i]), b.max(vals[i]))
    });
    let mut fit = HolderFit {
        alpha: None,
        slope: f64::NAN,
        gamma: 0.0,
        r2: f64::NAN,
        pairs: pair_count,
        sup_norm: sup,
        dist: f64::NAN,
        max_diff: 0.0,
        candidate,
        region: region.clone(),
        p,
    };
    if nodes.len() >= 2 && rmax == rmin {
        return Ok(fit);
    }
    let pts = |idx: Vec<usize>| -> Result<Vec<SplitPoint>> {
        idx.into_iter()
            .map(|i| SplitPoint::from_coords(&g.coords(i), s))
            .collect()
    };
    fit.dist = twop_dist(&pts(nodes.clone())?, &pts(g.boundary_nodes())?, sup, p)?;
    let pairs = sample_pairs(u, &nodes, pair_count, seed, mode)?;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for &(x, y) in &pairs {
        let du = (vals[x] - vals[y]).abs();
        fit.max_diff = fit.max_diff.max(du);
        let d = intrinsic_distance(&g.coords(x), &g.coords(y), s, sup, p) / fit.dist;
        if du > 0.0 && d > 0.0 {
            lx.push(d.ln());
            ly.push((du / sup).ln());
        }
    }
    let (_, slope, r2) = linear_fit(&lx, &ly).ok_or(Error::EmptyRegion)?;
    fit.slope = slope;
    fit.alpha = Some(slope.min(1.0));
    fit.r2 = r2;
    fit.gamma = pairs
        .iter()
        .filter_map(|&(x, y)| fit.ratio(u, x, y))
        .fold(0.0, f64::max);
    Ok(fit)
}
