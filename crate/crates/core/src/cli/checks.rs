use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::field::{ScalarField, Sign};
use crate::geometry::{Polydisc, SplitPoint};
use crate::kscover::ks_slice_bound;
use crate::params::intrinsic_theta;
use crate::regularity::{
    expansion_sweep, harnack_sweep, holder_fit, l1_linf_sweep, osc_decay, sup_bound_sweep, PairMode, RegularityReport,
};
use crate::solver::{bump_functions, check_truncation_subsolution, normalize_transform, residual};

/// Sup norm of the discrete residual of `u` under the configured flux.
pub(super) fn residual_of(u: &ScalarField, cfg: &ExperimentConfig) -> Result<f64> {
    if u.grid().split() != cfg.params.s() || (u.grid().p() - cfg.params.p()).abs() > 1e-12 {
        return Err(Error::Config("field does not match [equation]".into()));
    }
    let flux = cfg.flux.clone().with_eps(cfg.solver.epsilon);
    Ok(residual(u, &flux, &cfg.params)?.sup_norm())
}

fn require_admissible(check: &str, reports: &[RegularityReport]) -> Result<()> {
    if reports.iter().any(|r| r.hypothesis) {
        Ok(())
    } else {
        Err(Error::NotContained(format!("no admissible key for {check}")))
    }
}

fn max_k(reports: &[RegularityReport]) -> Option<f64> {
    reports
        .iter()
        .filter(|r| r.hypothesis)
        .filter_map(|r| r.constant("K"))
        .filter(|k| k.is_finite())
        .reduce(f64::max)
}

pub(super) fn run_check(
    check: &str,
    u: &ScalarField,
    cfg: &ExperimentConfig,
    residual: f64,
    seed: u64,
) -> Result<Vec<RegularityReport>> {
    let c = &cfg.checks;
    let params = &cfg.params;
    let s = params.s();
    let reports = match check {
        "harnack" => {
            let r = harnack_sweep(u, params, &c.harnack)?;
            require_admissible(check, &r)?;
            r
        }
        "supbound" => {
            let r = sup_bound_sweep(u, params, &c.supbound, c.supbound_l)?;
            require_admissible(check, &r)?;
            r
        }
        "l1linf" => {
            let r = l1_linf_sweep(u, params, &c.l1linf)?;
            require_admissible(check, &r)?;
            r
        }
        "expansion" => {
            let r = expansion_sweep(u, params, &c.expansion, c.expansion_nu, c.expansion_delta, params.c())?;
            require_admissible(check, &r)?;
            r
        }
        "oscdecay" => {
            // without an explicit K, use the largest Harnack constant seen on this field
            let k = match c.osc_k {
                Some(k) => k,
                None => {
                    let h = harnack_sweep(u, params, &c.harnack)?;
                    max_k(&h).unwrap_or(1.0)
                }
            };
            let k = k.max(1.0 + 1e-9);
            let mut out = Vec::with_capacity(c.osc_centers.len());
            for y in &c.osc_centers {
                let y_o = SplitPoint::from_coords(y, s)?;
                match osc_decay(u, params, &y_o, k, c.osc_delta_bar) {
                    Ok(mut r) => {
                        r.constants.push(("K", k));
                        out.push(r);
                    }
                    Err(Error::NotContained(_)) | Err(Error::EmptyRegion) => {
                        out.push(RegularityReport::vacuous("oscdecay", y.clone()));
                    }
                    Err(e) => return Err(e),
                }
            }
            require_admissible(check, &out)?;
            out
        }
        "holder" => {
            let center = SplitPoint::from_coords(&c.holder_center, s)?;
            let region = Polydisc::new(center, c.holder_theta, c.holder_rho)?;
            let fit = holder_fit(u, params, &region, c.holder_pairs, seed, PairMode::Mixed)?;
            let fresh = fit.violations(u, c.holder_fresh, seed.wrapping_add(1), PairMode::Mixed, c.holder_slack)?;
            let mut r = fit.report();
            r.constants.push(("fresh_violations", fresh as f64));
            r.scales.push(("slack", c.holder_slack));
            r.pass &= fresh == 0;
            vec![r]
        }
        "truncation" => {
            let flux = cfg.flux.clone().with_eps(cfg.solver.epsilon);
            let bumps = bump_functions(u.grid(), c.truncation_bumps, seed);
            let (lo, hi) = (u.min(), u.max());
            let levels = c.truncation_levels;
            let mut out = Vec::new();
            for i in 0..levels {
                let k = lo + (i + 1) as f64 / (levels + 1) as f64 * (hi - lo);
                for sign in [Sign::Plus, Sign::Minus] {
                    let t = check_truncation_subsolution(u, k, sign, &bumps, &flux, residual)?;
                    let mut r = RegularityReport::new("truncation", Vec::new());
                    r.pass = t.all_pass();
                    r.constants = vec![
                        ("failures", t.failures() as f64),
                        (
                            "max_integral",
                            t.entries.iter().map(|e| e.integral).fold(f64::NEG_INFINITY, f64::max),
                        ),
                        ("eta", t.entries.iter().map(|e| e.eta).fold(0.0, f64::max)),
                    ];
                    r.scales = vec![("k", k), ("sign", sign.as_f64())];
                    out.push(r);
                }
            }
            out
        }
        "ks" => {
            let x_o = SplitPoint::from_coords(&c.ks_center, s)?;
            let uo = u
                .interpolate(&c.ks_center)
                .ok_or_else(|| Error::NotContained("ks center outside the grid".into()))?;
            if !(uo > 0.0) {
                return Err(Error::NonPositive(format!("u = {uo} at the ks center")));
            }
            let theta = intrinsic_theta(uo, c.ks_rho, params.p(), c.ks_delta_bar);
            let n = normalize_transform(u, &x_o, theta, c.ks_rho, params)?;
            let b = ks_slice_bound(&n.v, c.ks_beta)?;
            vec![b.report()]
        }
        other => return Err(Error::Config(format!("unknown check {other:?}"))),
    };
    Ok(reports)
}
