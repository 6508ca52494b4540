use super::report::{Branch, RegularityReport};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{region_nodes, region_stats, sublevel_measure, twop_dist, Polydisc, SplitPoint};
use crate::params::{intrinsic_theta, StructureParams};

/// Candidates `2^{-j}`, `j = 0..EXPANSION_SCAN_DEPTH`, tried for `δ_o`.
pub const EXPANSION_SCAN_DEPTH: i32 = 31;

fn value_at(u: &ScalarField, x: &SplitPoint) -> Result<f64> {
    u.interpolate(&x.coords())
        .ok_or_else(|| Error::NotContained(format!("point {:?} outside the grid", x.coords())))
}

fn require_contained(u: &ScalarField, q: &Polydisc, what: &str) -> Result<()> {
    let (lo, hi) = q.bounding_box();
    if u.grid().contains_box(&lo, &hi) {
        Ok(())
    } else {
        Err(Error::NotContained(format!(
            "{what} = Q({:.6}, {:.6}) around {:?}",
            q.theta,
            q.rho,
            q.center.coords()
        )))
    }
}

fn check_point(u: &ScalarField, x: &SplitPoint) -> Result<()> {
    let g = u.grid();
    if x.ndim() != g.ndim() || x.s() != g.split() {
        return Err(Error::SplitMismatch {
            expected: g.split(),
            found: x.s(),
        });
    }
    Ok(())
}

/// `(θ² / ρ^p)^{1/(2-p)}`, the size below which the sup and L¹–L^∞
/// estimates are trivially explained.
fn alternative_size(theta: f64, rho: f64, p: f64) -> f64 {
    (theta * theta / rho.powf(p)).powf(1.0 / (2.0 - p))
}

/// `sup_{Q_{θ/2,ρ/2}} u ≤ γ (ρ^p/θ²)^{(N-s)p̄/(p λ_l)} (⨍ u_+^l)^{p̄/λ_l} + γ (θ²/ρ^p)^{1/(2-p)}`
/// unless `(θ²/ρ^p)^{1/(2-p)} ≤ C ρ`.
pub fn sup_bound_check(
    u: &ScalarField,
    params: &StructureParams,
    center: &SplitPoint,
    theta: f64,
    rho: f64,
    l: f64,
) -> Result<RegularityReport> {
    check_point(u, center)?;
    params.require_singular()?;
    let lambda = params.lambda_l(l)?;
    if !(lambda > 0.0) {
        return Err(Error::OutOfRange {
            what: "lambda_l",
            value: lambda,
            range: "(0, inf)",
        });
    }
    let q = Polydisc::new(center.clone(), theta, rho)?;
    require_contained(u, &q.scaled(2.0, 2.0), "Q(2θ, 2ρ)")?;
    let p = params.p();
    let mut rep = RegularityReport::new("supbound", center.coords());
    rep.scales = vec![("theta", theta), ("rho", rho), ("l", l)];
    let alt = alternative_size(theta, rho, p);
    if alt <= params.c() * rho {
        rep.branch = Branch::Alternative;
        return Ok(rep);
    }
    let lhs = region_stats(u, &q.scaled(0.5, 0.5))?.sup;
    let nodes = region_nodes(u, &q);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let avg = nodes.iter().map(|&i| u.values()[i].max(0.0).powf(l)).sum::<f64>() / nodes.len() as f64;
    let pbar = params.harmonic_mean();
    let ns = params.singular_dims() as f64;
    let e = pbar / lambda;
    let first = (rho.powf(p) / (theta * theta)).powf(ns / p * e) * avg.powf(e);
    let gamma = if lhs <= 0.0 { 0.0 } else { lhs / (first + alt) };
    rep.pass = gamma.is_finite();
    rep.constants = vec![("gamma", gamma), ("lhs", lhs), ("rhs_unit", first + alt)];
    Ok(rep)
}

/// `sup_{Q_{θ/2,ρ/2}} u ≤ γ { (ρ^p/θ²)^{(N-s)/χ} inf_{x'} ρ^{s-N} (∫_{B_{2ρ}} u(x', ·))^{p/χ} + (θ²/ρ^p)^{1/(2-p)} }`
/// unless `(θ²/ρ^p)^{1/(2-p)} ≤ ρ`. The inner integrals use the midpoint
/// rule on the nodes of each slice.
pub fn l1_linf_check(
    u: &ScalarField,
    params: &StructureParams,
    xbar: &SplitPoint,
    theta: f64,
    rho: f64,
) -> Result<RegularityReport> {
    check_point(u, xbar)?;
    params.require_singular()?;
    params.require_supercritical()?;
    let q = Polydisc::new(xbar.clone(), theta, rho)?;
    let big = q.scaled(8.0, 8.0);
    require_contained(u, &big, "Q(8θ, 8ρ)")?;
    if region_nodes(u, &big).iter().any(|&i| u.values()[i] < 0.0) {
        return Err(Error::NonPositive("u takes negative values near the center".into()));
    }
    let p = params.p();
    let mut rep = RegularityReport::new("l1linf", xbar.coords());
    rep.scales = vec![("theta", theta), ("rho", rho)];
    let alt = alternative_size(theta, rho, p);
    if alt <= rho {
        rep.branch = Branch::Alternative;
        return Ok(rep);
    }
    let lhs = region_stats(u, &q.scaled(0.5, 0.5))?.sup;

    // B_{θ/2}(x̄') × B_{2ρ}(x̄''), grouped by the prime part of the node
    let g = u.grid();
    let s = g.split();
    let slab = g.strides()[s - 1];
    let dvol: f64 = g.spacing()[s..].iter().product();
    let mut slices: Vec<(usize, f64)> = Vec::new();
    for i in region_nodes(u, &q.scaled(0.5, 2.0)) {
        let key = i / slab;
        match slices.last_mut() {
            Some((k, acc)) if *k == key => *acc += u.values()[i] * dvol,
            _ => slices.push((key, u.values()[i] * dvol)),
        }
    }
    if slices.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let inf_slice = slices.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let chi = params.chi();
    let ns = params.singular_dims() as f64;
    let first = (rho.powf(p) / (theta * theta)).powf(ns / chi) * rho.powf(-ns) * inf_slice.powf(p / chi);
    let gamma = if lhs <= 0.0 { 0.0 } else { lhs / (first + alt) };
    rep.pass = gamma.is_finite();
    rep.constants = vec![("gamma", gamma), ("lhs", lhs), ("inf_slice", inf_slice)];
    Ok(rep)
}

/// Expansion of positivity: if `[u ≤ M]` fills at most `1 - ν` of
/// `Q_{θ,ρ}(x̄)` with `θ = ρ^{p/2}(δM)^{(2-p)/2}`, find the largest
/// `δ_o = 2^{-j}` with `u ≥ δ_o M / 2` on `Q_{η,2ρ}(x̄)`,
/// `η = (2ρ)^{p/2}(δ_o M)^{(2-p)/2}`. The alternative is `M ≤ k_alt ρ`.
/// `Q_{η,2ρ}` is clipped to the grid box.
#[allow(clippy::too_many_arguments)]
pub fn expansion_check(
    u: &ScalarField,
    params: &StructureParams,
    xbar: &SplitPoint,
    m: f64,
    rho: f64,
    nu: f64,
    delta: f64,
    k_alt: f64,
) -> Result<RegularityReport> {
    check_point(u, xbar)?;
    params.require_singular()?;
    if !(m > 0.0) || !(rho > 0.0) {
        return Err(Error::NonPositive(format!("M = {m}, rho = {rho}")));
    }
    for (what, v) in [("nu", nu), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::OutOfRange {
                what,
                value: v,
                range: "(0, 1)",
            });
        }
    }
    let p = params.p();
    let theta = rho.powf(p / 2.0) * (delta * m).powf((2.0 - p) / 2.0);
    let q = Polydisc::new(xbar.clone(), theta, rho)?;
    require_contained(u, &q.scaled(2.0, 2.0), "Q(2θ, 2ρ)")?;
    let nodes = region_nodes(u, &q);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let total = nodes.len() as f64 * u.grid().cell_volume();
    let below = sublevel_measure(u, &q, m)?;
    let mut rep = RegularityReport::new("expansion", xbar.coords());
    rep.scales = vec![("M", m), ("rho", rho), ("theta", theta), ("nu", nu), ("delta", delta)];
    rep.constants.push(("sublevel_fraction", below / total));
    rep.hypothesis = below <= (1.0 - nu) * total;
    if !rep.hypothesis {
        return Ok(rep);
    }
    if m <= k_alt * rho {
        rep.branch = Branch::Alternative;
        return Ok(rep);
    }
    let mut found = None;
    for j in 0..EXPANSION_SCAN_DEPTH {
        let d = 2f64.powi(-j);
        let eta = (2.0 * rho).powf(p / 2.0) * (d * m).powf((2.0 - p) / 2.0);
        let region = Polydisc::new(xbar.clone(), eta, 2.0 * rho)?;
        let stats = region_stats(u, &region)?;
        if stats.inf >= d * m / 2.0 {
            found = Some((d, eta, stats.clipped_fraction));
            break;
        }
    }
    match found {
        Some((d, eta, clipped)) => {
            rep.constants.push(("delta_o", d));
            rep.scales.push(("eta", eta));
            rep.scales.push(("clipped_fraction", clipped));
        }
        None => rep.pass = false,
    }
    Ok(rep)
}

/// `K̂ = u(x_o) / inf_{Q_{θ,ρ}(x_o)} u` with `θ = δ̄ u(x_o)^{(2-p)/2} ρ^{p/2}`.
/// The branch is `Alternative` when `u(x_o) ≤ K̂ ρ`.
pub fn harnack_estimate(
    u: &ScalarField,
    params: &StructureParams,
    x_o: &SplitPoint,
    rho: f64,
    delta_bar: f64,
) -> Result<RegularityReport> {
    check_point(u, x_o)?;
    params.require_singular()?;
    params.require_supercritical()?;
    let p = params.p();
    let uo = value_at(u, x_o)?;
    if !(uo > 0.0) {
        return Err(Error::NonPositive(format!("u(x_o) = {uo}")));
    }
    let mcal = u.sup_norm().powf((2.0 - p) / 2.0) * rho.powf(p / 2.0);
    require_contained(u, &Polydisc::new(x_o.clone(), mcal, rho)?, "Q(M, ρ)")?;
    let theta = intrinsic_theta(uo, rho, p, delta_bar);
    let q = Polydisc::new(x_o.clone(), theta, rho)?;
    let inf = region_nodes(u, &q).iter().map(|&i| u.values()[i]).fold(uo, f64::min);
    let k = if inf > 0.0 { uo / inf } else { f64::INFINITY };
    let mut rep = RegularityReport::new("harnack", x_o.coords());
    rep.scales = vec![("rho", rho), ("theta", theta), ("delta_bar", delta_bar)];
    rep.constants = vec![("K", k), ("u_xo", uo), ("inf", inf)];
    rep.pass = k.is_finite();
    if uo <= k * rho {
        rep.branch = Branch::Alternative;
    }
    Ok(rep)
}

/// Nested intrinsic polydiscs `𝒬_n = Q_{θ_n,ρ_n}(y_o)` with `ρ_n = δ^n R`,
/// `ω_n = δ^n ω_o`, `θ_n = δ̄ ρ_n^{p/2} ω_n^{(2-p)/2}`, `δ = 4K/(4K+1)`,
/// `ω_o = 2‖u‖` and `R` half the (2,p)-distance from `y_o` to the boundary.
/// Levels stop once `𝒬_n` spans fewer than three cells along some axis;
/// passes iff `osc_{𝒬_n} u ≤ δ^n ω_o` at every level computed.
pub fn osc_decay(
    u: &ScalarField,
    params: &StructureParams,
    y_o: &SplitPoint,
    k: f64,
    delta_bar: f64,
) -> Result<RegularityReport> {
    check_point(u, y_o)?;
    params.require_singular()?;
    if !(k > 1.0) {
        return Err(Error::OutOfRange {
            what: "K",
            value: k,
            range: "(1, inf)",
        });
    }
    let g = u.grid();
    let p = params.p();
    let s = g.split();
    let mut rep = RegularityReport::new("oscdecay", y_o.coords());
    let delta = 4.0 * k / (4.0 * k + 1.0);
    let sup = u.sup_norm();
    if sup == 0.0 {
        rep.series.push(0.0);
        rep.constants = vec![("delta", delta), ("delta_hat", 0.0)];
        return Ok(rep);
    }
    let boundary: Vec<SplitPoint> = g
        .boundary_nodes()
        .into_iter()
        .map(|i| SplitPoint::from_coords(&g.coords(i), s))
        .collect::<Result<_>>()?;
    let r = twop_dist(std::slice::from_ref(y_o), &boundary, sup, p)? / 2.0;
    let omega = 2.0 * sup;
    let hp = g.spacing()[..s].iter().cloned().fold(0.0, f64::max);
    let hpp = g.spacing()[s..].iter().cloned().fold(0.0, f64::max);
    let resolved = |theta: f64, rho: f64| 2.0 * theta >= 3.0 * hp && 2.0 * rho >= 3.0 * hpp;
    let theta_at =
        |n: i32| delta_bar * (delta.powi(n) * r).powf(p / 2.0) * (delta.powi(n) * omega).powf((2.0 - p) / 2.0);
    let q0 = Polydisc::new(y_o.clone(), theta_at(0), r)?;
    require_contained(u, &q0, "Q_0")?;
    if !resolved(q0.theta, q0.rho) {
        return Err(Error::NotContained("Q_0 spans fewer than three cells".into()));
    }
    let mut pass = true;
    let mut n = 0;
    loop {
        let rho_n = delta.powi(n) * r;
        let theta_n = theta_at(n);
        if !resolved(theta_n, rho_n) {
            break;
        }
        let osc = region_stats(u, &Polydisc::new(y_o.clone(), theta_n, rho_n)?)?.osc;
        pass &= osc <= delta.powi(n) * omega;
        rep.series.push(osc);
        n += 1;
    }
    let delta_hat = rep
        .series
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    rep.pass = pass;
    rep.constants = vec![("delta", delta), ("delta_hat", delta_hat), ("R", r), ("omega_o", omega)];
    rep.scales = vec![
        ("levels", n as f64),
        ("theta_0", theta_at(0)),
        ("theta_0_displayed", 2f64.powf((p - 2.0) / 2.0) * theta_at(0)),
    ];
    Ok(rep)
}
