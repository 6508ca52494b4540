//! Point-and-radius selection on finite quasi-metric spaces: given `u` on
//! the unit ball `𝔹₁(x₀)` with `u(x₀) ≥ 1`, find `x` and `r` with
//! `𝔹_r(x) ⊆ 𝔹₁(x₀)`, `r^β sup_{𝔹_r(x)} u ≤ ω` and `r^β u(x) ≥ 1/ω`,
//! with `ω` as small as possible over dyadic radii.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{euclid, QuasiMetric, SplitPoint};
use crate::regularity::RegularityReport;

/// Finite point set with a full distance matrix. Balls are open.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiMetricSpace {
    n: usize,
    dist: Vec<f64>,
    gamma_q: f64,
    base: usize,
}

impl QuasiMetricSpace {
    /// `dist` is row-major `n × n`; it must be symmetric with zero exactly
    /// on the diagonal.
    pub fn new(dist: Vec<f64>, n: usize, gamma_q: f64, base: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySet("points"));
        }
        if dist.len() != n * n {
            return Err(Error::InvalidParams(format!(
                "distance matrix has {} entries for {n} points",
                dist.len()
            )));
        }
        if base >= n {
            return Err(Error::InvalidParams(format!("base point {base} out of {n}")));
        }
        if !(gamma_q >= 1.0 && gamma_q.is_finite()) {
            return Err(Error::OutOfRange {
                what: "gamma_q",
                value: gamma_q,
                range: "[1, inf)",
            });
        }
        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                let ok = if i == j {
                    d == 0.0
                } else {
                    d > 0.0 && d.is_finite() && d == dist[j * n + i]
                };
                if !ok {
                    return Err(Error::InvalidParams(format!("d({i}, {j}) = {d}")));
                }
            }
        }
        Ok(Self { n, dist, gamma_q, base })
    }

    /// Points under `d_M`, with the quasi-constant of `q`.
    pub fn from_points(points: &[SplitPoint], q: &QuasiMetric, base: usize) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = q.distance(&points[i], &points[j])?;
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::new(dist, n, q.gamma_q, base)
    }

    /// Points under the Euclidean metric.
    pub fn euclidean(points: &[Vec<f64>], base: usize) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = euclid(&points[i], &points[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::new(dist, n, 1.0, base)
    }

    /// `side × side` lattice on `[-1, 1]²` (`s = 1`) under `d_M`, based at
    /// node `(side/2, side/2)`.
    pub fn lattice(side: usize, q: &QuasiMetric) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidParams("lattice needs at least 2 nodes per side".into()));
        }
        let t = |k: usize| -1.0 + 2.0 * k as f64 / (side - 1) as f64;
        let points: Vec<SplitPoint> = (0..side * side)
            .map(|k| SplitPoint::new(vec![t(k / side)], vec![t(k % side)]))
            .collect();
        Self::from_points(&points, q, (side / 2) * side + side / 2)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn gamma_q(&self) -> f64 {
        self.gamma_q
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn in_unit_ball(&self, i: usize) -> bool {
        self.distance(self.base, i) < 1.0
    }

    /// Triples violating `d(x, z) ≤ γ_q (d(x, y) + d(y, z))`, by exhaustion,
    /// with `1e-12` relative slack for triples attaining equality.
    pub fn quasi_triangle_violations(&self) -> usize {
        let n = self.n;
        (0..n)
            .into_par_iter()
            .map(|x| {
                let mut bad = 0;
                for y in 0..n {
                    for z in 0..n {
                        if self.distance(x, z)
                            > (1.0 + 1e-12) * self.gamma_q * (self.distance(x, y) + self.distance(y, z))
                        {
                            bad += 1;
                        }
                    }
                }
                bad
            })
            .sum()
    }

    /// `2^{-j}` from 1 down to half the smallest positive distance.
    pub fn dyadic_radii(&self) -> Vec<f64> {
        let dmin = (0..self.n)
            .flat_map(|i| (0..self.n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.distance(i, j))
            .fold(f64::INFINITY, f64::min);
        let floor = if dmin.is_finite() { dmin / 2.0 } else { 0.5 };
        let mut out = Vec::new();
        let mut r = 1.0;
        while r >= floor {
            out.push(r);
            r *= 0.5;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSSelection {
    pub x: usize,
    pub r: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsViolation {
    BadRadius,
    BallNotContained,
    SupBound,
    LowerBound,
}

impl fmt::Display for KsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KsViolation::BadRadius => "radius not positive",
            KsViolation::BallNotContained => "ball not contained",
            KsViolation::SupBound => "sup bound exceeds omega",
            KsViolation::LowerBound => "lower bound below 1/omega",
        })
    }
}

#[derive(PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn balanced(rb: f64, sup: f64, ux: f64) -> f64 {
    (rb * sup).max(1.0 / (rb * ux))
}

/// Minimizes `ω = max(r^β sup_{𝔹_r(x)} u, 1/(r^β u(x)))` over centers in
/// the unit ball and radii from [`QuasiMetricSpace::dyadic_radii`]. Ties go
/// to the larger radius, then the base point, then the lower index.
pub fn ks_select(space: &QuasiMetricSpace, u: &[f64], beta: f64) -> Result<KSSelection> {
    if u.len() != space.len() {
        return Err(Error::InvalidParams(format!(
            "{} values for {} points",
            u.len(),
            space.len()
        )));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::NonPositive(format!("beta = {beta}")));
    }
    let inside: Vec<usize> = (0..space.len()).filter(|&i| space.in_unit_ball(i)).collect();
    if let Some(&i) = inside.iter().find(|&&i| !u[i].is_finite()) {
        return Err(Error::InvalidParams(format!("u is unbounded at point {i}")));
    }
    if !(u[space.base()] >= 1.0) {
        return Err(Error::OutOfRange {
            what: "u(x0)",
            value: u[space.base()],
            range: "[1, inf)",
        });
    }
    let radii = space.dyadic_radii();
    let best = inside
        .par_iter()
        .filter(|&&x| u[x] > 0.0)
        .filter_map(|&x| {
            // the ball stays inside the unit ball iff r ≤ distance to the
            // nearest point outside it
            let mut escape = f64::INFINITY;
            let mut near: Vec<(f64, f64)> = Vec::with_capacity(space.len());
            for (y, &uy) in u.iter().enumerate() {
                let d = space.distance(x, y);
                if space.in_unit_ball(y) {
                    near.push((d, uy));
                } else {
                    escape = escape.min(d);
                }
            }
            near.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut best: Option<(f64, usize)> = None;
            let (mut k, mut sup) = (0, f64::NEG_INFINITY);
            for (j, &r) in radii.iter().enumerate().rev() {
                while k < near.len() && near[k].0 < r {
                    sup = sup.max(near[k].1);
                    k += 1;
                }
                if r > escape {
                    break;
                }
                let om = balanced(r.powf(beta), sup, u[x]);
                if best.is_none_or(|b| om <= b.0) {
                    best = Some((om, j));
                }
            }
            best.map(|(om, j)| (om, j, x))
        })
        .min_by_key(|&(om, j, x)| (OrdF64(om), j, x != space.base(), x));
    let (omega, j, x) = best.ok_or(Error::EmptySet("admissible centers"))?;
    Ok(KSSelection { x, r: radii[j], omega })
}

/// Re-checks a selection from scratch.
pub fn ks_witness_check(
    space: &QuasiMetricSpace,
    u: &[f64],
    beta: f64,
    sel: &KSSelection,
) -> std::result::Result<(), KsViolation> {
    if !(sel.r > 0.0) || sel.x >= space.len() || u.len() != space.len() {
        return Err(KsViolation::BadRadius);
    }
    let ball: Vec<usize> = (0..space.len()).filter(|&y| space.distance(sel.x, y) < sel.r).collect();
    if !ball.iter().all(|&y| space.in_unit_ball(y)) {
        return Err(KsViolation::BallNotContained);
    }
    let rb = sel.r.powf(beta);
    let sup = ball.iter().map(|&y| u[y]).fold(f64::NEG_INFINITY, f64::max);
    if !(rb * sup <= sel.omega) {
        return Err(KsViolation::SupBound);
    }
    if !(1.0 / (rb * u[sel.x]) <= sel.omega) {
        return Err(KsViolation::LowerBound);
    }
    Ok(())
}

/// Selection on the slice `x' = 0` of a field normalized so that the node
/// at the origin has value 1, under the Euclidean metric in `x''`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceBound {
    pub selection: KSSelection,
    pub point: Vec<f64>,
    pub value: f64,
    pub sup: f64,
    /// `1 / (ω r^β)`, at most `value`.
    pub lower: f64,
    /// `ω / r^β`, at least `sup`.
    pub upper: f64,
    pub witness: std::result::Result<(), KsViolation>,
}

impl SliceBound {
    pub fn report(&self) -> RegularityReport {
        let mut rep = RegularityReport::new("ks", self.point.clone());
        rep.constants = vec![
            ("omega", self.selection.omega),
            ("value", self.value),
            ("sup", self.sup),
            ("lower", self.lower),
            ("upper", self.upper),
        ];
        rep.scales = vec![("r", self.selection.r)];
        rep.pass = self.witness.is_ok() && self.lower <= self.value && self.sup <= self.upper;
        rep
    }
}

pub fn ks_slice_bound(v: &ScalarField, beta: f64) -> Result<SliceBound> {
    let g = v.grid();
    let s = g.split();
    let origin = vec![0.0; g.ndim()];
    let o = g.nearest_node(&origin);
    if g.coords(o).iter().any(|&c| c.abs() > 1e-12) {
        return Err(Error::NotContained("the origin is not a grid node".into()));
    }
    let slice: Vec<usize> = (0..g.len())
        .filter(|&i| (0..s).all(|a| g.axis_index(i, a) == g.axis_index(o, a)))
        .collect();
    let points: Vec<Vec<f64>> = slice.iter().map(|&i| g.coords(i)[s..].to_vec()).collect();
    let base = slice.iter().position(|&i| i == o).ok_or(Error::EmptyRegion)?;
    let space = QuasiMetricSpace::euclidean(&points, base)?;
    let vals: Vec<f64> = slice.iter().map(|&i| v.values()[i]).collect();
    let sel = ks_select(&space, &vals, beta)?;
    let rb = sel.r.powf(beta);
    let sup = (0..space.len())
        .filter(|&y| space.distance(sel.x, y) < sel.r)
        .map(|y| vals[y])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SliceBound {
        selection: sel,
        point: g.coords(slice[sel.x]),
        value: vals[sel.x],
        sup,
        lower: 1.0 / (sel.omega * rb),
        upper: sel.omega / rb,
        witness: ks_witness_check(&space, &vals, beta, &sel),
    })
}
