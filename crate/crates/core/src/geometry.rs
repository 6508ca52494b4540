//! Intrinsic polydiscs, the quasi-metric `d_M`, the anisotropic
//! `(2,p)`-distance and region statistics on grids.

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// A point split as `(x', x'') ∈ R^s × R^{N-s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPoint {
    pub prime: Vec<f64>,
    pub doubleprime: Vec<f64>,
}

impl SplitPoint {
    pub fn new(prime: Vec<f64>, doubleprime: Vec<f64>) -> Self {
        Self { prime, doubleprime }
    }

    pub fn from_coords(x: &[f64], s: usize) -> Result<Self> {
        if s == 0 || s >= x.len() {
            return Err(Error::SplitMismatch {
                expected: s + 1,
                found: x.len(),
            });
        }
        Ok(Self {
            prime: x[..s].to_vec(),
            doubleprime: x[s..].to_vec(),
        })
    }

    pub fn s(&self) -> usize {
        self.prime.len()
    }

    pub fn ndim(&self) -> usize {
        self.prime.len() + self.doubleprime.len()
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = self.prime.clone();
        v.extend_from_slice(&self.doubleprime);
        v
    }

    fn check_compatible(&self, other: &SplitPoint) -> Result<()> {
        if self.prime.len() != other.prime.len() {
            return Err(Error::SplitMismatch {
                expected: self.prime.len(),
                found: other.prime.len(),
            });
        }
        if self.doubleprime.len() != other.doubleprime.len() {
            return Err(Error::SplitMismatch {
                expected: self.doubleprime.len(),
                found: other.doubleprime.len(),
            });
        }
        Ok(())
    }

    /// `(|x' - y'|, |x'' - y''|)`.
    pub fn block_distances(&self, other: &SplitPoint) -> Result<(f64, f64)> {
        self.check_compatible(other)?;
        Ok((
            euclid(&self.prime, &other.prime),
            euclid(&self.doubleprime, &other.doubleprime),
        ))
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Volume of the Euclidean unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// `Q_{θ,ρ}(c) = B_θ(c') × B_ρ(c'')`, open Euclidean balls in each block.
#[derive(Debug, Clone, PartialEq)]
pub struct Polydisc {
    pub center: SplitPoint,
    pub theta: f64,
    pub rho: f64,
}

impl Polydisc {
    pub fn new(center: SplitPoint, theta: f64, rho: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) || !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::NonPositive(format!("theta = {theta}, rho = {rho}")));
        }
        Ok(Self { center, theta, rho })
    }

    pub fn at(x: &[f64], s: usize, theta: f64, rho: f64) -> Result<Self> {
        Self::new(SplitPoint::from_coords(x, s)?, theta, rho)
    }

    /// Same center, radii multiplied by `(a, b)`.
    pub fn scaled(&self, a: f64, b: f64) -> Self {
        Self {
            center: self.center.clone(),
            theta: self.theta * a,
            rho: self.rho * b,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let s = self.center.s();
        euclid(&x[..s], &self.center.prime) < self.theta && euclid(&x[s..], &self.center.doubleprime) < self.rho
    }

    /// Continuum measure `ω_s θ^s ω_{N-s} ρ^{N-s}`.
    pub fn measure(&self) -> f64 {
        let s = self.center.s();
        let r = self.center.doubleprime.len();
        unit_ball_volume(s) * self.theta.powi(s as i32) * unit_ball_volume(r) * self.rho.powi(r as i32)
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.center.coords();
        let s = self.center.s();
        let lo = c
            .iter()
            .enumerate()
            .map(|(a, &x)| x - if a < s { self.theta } else { self.rho })
            .collect();
        let hi = c
            .iter()
            .enumerate()
            .map(|(a, &x)| x + if a < s { self.theta } else { self.rho })
            .collect();
        (lo, hi)
    }
}

/// `d_M(x, y) = max{ |x'-y'|^{2/p} M^{-2/p}, |x''-y''| }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiMetric {
    pub m: f64,
    pub p: f64,
    pub gamma_q: f64,
}

impl QuasiMetric {
    pub fn new(m: f64, p: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::NonPositive(format!("M = {m}")));
        }
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::OutOfRange {
                what: "p",
                value: p,
                range: "(1, 2]",
            });
        }
        Ok(Self {
            m,
            p,
            gamma_q: 2f64.powf(2.0 / p - 1.0),
        })
    }

    pub fn distance(&self, x: &SplitPoint, y: &SplitPoint) -> Result<f64> {
        let (dp, dpp) = x.block_distances(y)?;
        Ok(self.combine(dp, dpp))
    }

    pub(crate) fn combine(&self, dprime: f64, ddoubleprime: f64) -> f64 {
        let q = 2.0 / self.p;
        (dprime.powf(q) * self.m.powf(-q)).max(ddoubleprime)
    }

    /// The `d_M` ball of radius `rho`, which is the polydisc `Q_{ρ^{p/2}M, ρ}`.
    pub fn ball(&self, center: SplitPoint, rho: f64) -> Result<Polydisc> {
        Polydisc::new(center, rho.powf(self.p / 2.0) * self.m, rho)
    }
}

pub fn d_m(x: &SplitPoint, y: &SplitPoint, q: &QuasiMetric) -> Result<f64> {
    q.distance(x, y)
}

pub fn quasimetric_ball(center: SplitPoint, rho: f64, q: &QuasiMetric) -> Result<Polydisc> {
    q.ball(center, rho)
}

/// `inf { |x'-y'|^{2/p} ‖u‖^{(p-2)/p} + |x''-y''| : x ∈ K, y ∈ boundary }`.
pub fn twop_dist(k: &[SplitPoint], boundary: &[SplitPoint], uinf: f64, p: f64) -> Result<f64> {
    if k.is_empty() {
        return Err(Error::EmptySet("K"));
    }
    if boundary.is_empty() {
        return Err(Error::EmptySet("boundary"));
    }
    if !(uinf > 0.0) {
        return Err(Error::NonPositive(format!("sup norm {uinf}")));
    }
    let q = 2.0 / p;
    let scale = uinf.powf((p - 2.0) / p);
    let mut best = f64::INFINITY;
    for x in k {
        for y in boundary {
            let (dp, dpp) = x.block_distances(y)?;
            let d = dp.powf(q) * scale + dpp;
            if d < best {
                best = d;
            }
        }
    }
    Ok(best)
}

/// Sup/inf/mean over the grid nodes of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats {
    pub sup: f64,
    pub inf: f64,
    pub osc: f64,
    pub mean: f64,
    /// Node count times cell volume.
    pub measure: f64,
    pub count: usize,
    /// Whether the polydisc lies inside the grid box.
    pub contained: bool,
    /// Fraction of the polydisc's continuum measure outside the grid box.
    pub clipped_fraction: f64,
}

/// Nodes of `field`'s grid lying inside `region`.
pub fn region_nodes(field: &ScalarField, region: &Polydisc) -> Vec<usize> {
    let g = field.grid();
    let (lo, hi) = region.bounding_box();
    let mut x = vec![0.0; g.ndim()];
    g.nodes_in_box(&lo, &hi)
        .into_iter()
        .filter(|&i| {
            g.coords_into(i, &mut x);
            region.contains(&x)
        })
        .collect()
}

pub fn is_contained(field: &ScalarField, region: &Polydisc) -> bool {
    let (lo, hi) = region.bounding_box();
    field.grid().contains_box(&lo, &hi)
}

/// Fraction of a Euclidean ball of radius `r` around `c` falling outside the
/// box `[lo, hi]`, by midpoint sampling on a 32-per-axis lattice.
fn ball_outside_fraction(c: &[f64], r: f64, lo: &[f64], hi: &[f64]) -> f64 {
    let d = c.len();
    if (0..d).all(|a| c[a] - r >= lo[a] && c[a] + r <= hi[a]) {
        return 0.0;
    }
    if d == 1 {
        let inside = (c[0] + r).min(hi[0]) - (c[0] - r).max(lo[0]);
        return 1.0 - inside.max(0.0) / (2.0 * r);
    }
    const M: usize = 32;
    let (mut total, mut outside) = (0usize, 0usize);
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    loop {
        let mut norm2 = 0.0;
        for a in 0..d {
            let t = -1.0 + (2.0 * idx[a] as f64 + 1.0) / M as f64;
            norm2 += t * t;
            y[a] = c[a] + r * t;
        }
        if norm2 < 1.0 {
            total += 1;
            if (0..d).any(|a| y[a] < lo[a] || y[a] > hi[a]) {
                outside += 1;
            }
        }
        let mut a = d;
        loop {
            if a == 0 {
                return outside as f64 / total as f64;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < M {
                break;
            }
            idx[a] = 0;
        }
    }
}

fn clipped_fraction(field: &ScalarField, region: &Polydisc) -> f64 {
    let g = field.grid();
    let s = region.center.s();
    let lo = g.origin();
    let hi = g.upper();
    let fp = ball_outside_fraction(&region.center.prime, region.theta, &lo[..s], &hi[..s]);
    let fpp = ball_outside_fraction(&region.center.doubleprime, region.rho, &lo[s..], &hi[s..]);
    1.0 - (1.0 - fp) * (1.0 - fpp)
}

pub fn region_stats(field: &ScalarField, region: &Polydisc) -> Result<RegionStats> {
    check_split(field, region)?;
    let nodes = region_nodes(field, region);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let vals = field.values();
    let (mut sup, mut inf, mut sum) = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
    for &i in &nodes {
        let v = vals[i];
        sup = sup.max(v);
        inf = inf.min(v);
        sum += v;
    }
    Ok(RegionStats {
        sup,
        inf,
        osc: sup - inf,
        mean: sum / nodes.len() as f64,
        measure: nodes.len() as f64 * field.grid().cell_volume(),
        count: nodes.len(),
        contained: is_contained(field, region),
        clipped_fraction: clipped_fraction(field, region),
    })
}

/// Cell-counted measure of `[u ≤ level] ∩ region`.
pub fn sublevel_measure(field: &ScalarField, region: &Polydisc, level: f64) -> Result<f64> {
    check_split(field, region)?;
    let nodes = region_nodes(field, region);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let vals = field.values();
    let count = nodes.iter().filter(|&&i| vals[i] <= level).count();
    Ok(count as f64 * field.grid().cell_volume())
}

fn check_split(field: &ScalarField, region: &Polydisc) -> Result<()> {
    let g = field.grid();
    if region.center.ndim() != g.ndim() || region.center.s() != g.split() {
        return Err(Error::SplitMismatch {
            expected: g.ndim(),
            found: region.center.ndim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(a: &[f64], b: &[f64]) -> SplitPoint {
        SplitPoint::new(a.to_vec(), b.to_vec())
    }

    #[test]
    fn d_m_spot_values() {
        let q = QuasiMetric::new(1.0, 1.5).unwrap();
        let x = pt(&[0.3], &[0.7]);
        assert_eq!(q.distance(&x, &x).unwrap(), 0.0);
        assert!((q.distance(&pt(&[0.0], &[0.0]), &pt(&[1.0], &[0.0])).unwrap() - 1.0).abs() < 1e-15);
        let q2 = QuasiMetric::new(2.0, 1.5).unwrap();
        let d = q2.distance(&pt(&[0.0], &[0.0]), &pt(&[0.5], &[0.2])).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        assert!(q.distance(&x, &pt(&[0.1, 0.2], &[0.0])).is_err());
    }

    #[test]
    fn gamma_q_value() {
        let q = QuasiMetric::new(1.0, 1.5).unwrap();
        assert!((q.gamma_q - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn ball_radii() {
        let q = QuasiMetric::new(1.0, 1.5).unwrap();
        assert_eq!(q.ball(pt(&[0.0], &[0.0]), 1.0).unwrap().theta, 1.0);
        let b = q.ball(pt(&[0.0], &[0.0]), 4.0).unwrap();
        assert!((b.theta - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ball_membership_matches_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(m, p) in &[(1.0, 1.5), (2.0, 1.2), (0.5, 1.8)] {
            let q = QuasiMetric::new(m, p).unwrap();
            let c = pt(&[0.1, -0.2], &[0.3]);
            let rho = 0.6;
            let ball = q.ball(c.clone(), rho).unwrap();
            for _ in 0..10_000 {
                let y = pt(
                    &[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                    &[rng.gen_range(-1.0..1.5)],
                );
                let inside = q.distance(&c, &y).unwrap() < rho;
                assert_eq!(inside, ball.contains(&y.coords()));
            }
        }
    }

    #[test]
    fn twop_dist_cases() {
        let k = vec![pt(&[0.0], &[0.0])];
        assert_eq!(twop_dist(&k, &k, 2.0, 1.5).unwrap(), 0.0);
        let b = vec![pt(&[0.0], &[1.0])];
        assert!((twop_dist(&k, &b, 2.0, 1.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(twop_dist(&[], &b, 1.0, 1.5).is_err());
        assert!(twop_dist(&k, &[], 1.0, 1.5).is_err());
    }

    #[test]
    fn twop_dist_box_by_exhaustive_scan() {
        // K = nodes of [0.4,0.6]^2, boundary = perimeter nodes of [0,1]^2, step 0.05
        let step = 0.05;
        let mut k = Vec::new();
        for i in 8..=12 {
            for j in 8..=12 {
                k.push(pt(&[i as f64 * step], &[j as f64 * step]));
            }
        }
        let mut bd = Vec::new();
        for i in 0..=20 {
            let t = i as f64 * step;
            bd.extend([pt(&[t], &[0.0]), pt(&[t], &[1.0]), pt(&[0.0], &[t]), pt(&[1.0], &[t])]);
        }
        let (uinf, p) = (2.0f64, 1.5f64);
        let mut oracle = f64::INFINITY;
        for x in &k {
            for y in &bd {
                let dp = (x.prime[0] - y.prime[0]).abs();
                let dpp = (x.doubleprime[0] - y.doubleprime[0]).abs();
                oracle = oracle.min(dp.powf(4.0 / 3.0) * uinf.powf(-1.0 / 3.0) + dpp);
            }
        }
        let d = twop_dist(&k, &bd, uinf, p).unwrap();
        assert_eq!(d, oracle);
        // closest is the prime-direction gap 0.4: 0.4^{4/3} 2^{-1/3}
        assert!((d - 0.4f64.powf(4.0 / 3.0) * 2f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        // shrinking K and growing uinf never increase the distance
        assert!(twop_dist(&k[..3], &bd, uinf, p).unwrap() >= d);
        assert!(twop_dist(&k, &bd, 4.0, p).unwrap() <= d);
    }

    fn square(n: usize) -> Grid {
        Grid::unit(2, n, 1, 1.5).unwrap()
    }

    #[test]
    fn constant_field_stats() {
        let f = ScalarField::constant(square(21), 2.5);
        let r = Polydisc::at(&[0.5, 0.5], 1, 0.2, 0.3).unwrap();
        let st = region_stats(&f, &r).unwrap();
        assert_eq!((st.sup, st.inf, st.osc, st.mean), (2.5, 2.5, 0.0, 2.5));
        assert_eq!(st.measure, st.count as f64 * 0.05 * 0.05);
        assert!(st.contained);
        assert_eq!(st.clipped_fraction, 0.0);
    }

    #[test]
    fn coordinate_mean_on_square() {
        let f = ScalarField::from_fn(square(17), |x| x[0]);
        let r = Polydisc::at(&[0.5, 0.5], 1, 0.51, 0.51).unwrap();
        let st = region_stats(&f, &r).unwrap();
        assert_eq!(st.count, 17 * 17);
        assert!((st.mean - 0.5).abs() < 1e-14);
    }

    #[test]
    fn stats_match_naive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = square(23);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let f = ScalarField::new(g.clone(), vals).unwrap();
        for _ in 0..20 {
            let c = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let r = Polydisc::at(&c, 1, rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.5)).unwrap();
            let (mut sup, mut inf, mut sum, mut cnt, mut below) = (f64::MIN, f64::MAX, 0.0, 0, 0);
            for i in 0..g.len() {
                let x = g.coords(i);
                if (x[0] - c[0]).abs() < r.theta && (x[1] - c[1]).abs() < r.rho {
                    let v = f.values()[i];
                    sup = sup.max(v);
                    inf = inf.min(v);
                    sum += v;
                    cnt += 1;
                    if v <= 0.3 {
                        below += 1;
                    }
                }
            }
            let st = region_stats(&f, &r).unwrap();
            assert_eq!(st.count, cnt);
            assert_eq!((st.sup, st.inf), (sup, inf));
            assert!((st.mean - sum / cnt as f64).abs() < 1e-13);
            let m = sublevel_measure(&f, &r, 0.3).unwrap();
            assert_eq!(m, below as f64 * g.cell_volume());
        }
    }

    #[test]
    fn sublevel_extremes_and_ramp() {
        let g = Grid::new(vec![101, 3], vec![0.01, 0.5], vec![0.0, 0.0], 1, 1.5).unwrap();
        let f = ScalarField::from_fn(g.clone(), |x| x[0]);
        let r = Polydisc::at(&[0.5, 0.5], 1, 0.5001, 0.1).unwrap();
        let full = region_stats(&f, &r).unwrap().measure;
        assert_eq!(sublevel_measure(&f, &r, -1.0).unwrap(), 0.0);
        assert_eq!(sublevel_measure(&f, &r, 2.0).unwrap(), full);
        // the x'' block holds a single node row, so divide by its width
        let m = sublevel_measure(&f, &r, 0.25).unwrap() / 0.5;
        assert!((m - 0.25).abs() <= 0.01 + 1e-12, "{m}");
    }

    #[test]
    fn empty_region_rejected() {
        let f = ScalarField::constant(square(5), 1.0);
        let r = Polydisc::at(&[3.0, 3.0], 1, 0.1, 0.1).unwrap();
        assert!(matches!(region_stats(&f, &r), Err(Error::EmptyRegion)));
        assert!(sublevel_measure(&f, &r, 0.0).is_err());
    }

    #[test]
    fn clipped_fraction_half_disc() {
        let f = ScalarField::constant(square(11), 1.0);
        let r = Polydisc::at(&[0.0, 0.5], 1, 0.2, 0.2).unwrap();
        let st = region_stats(&f, &r).unwrap();
        assert!(!st.contained);
        assert!((st.clipped_fraction - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
