//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use anisoreg::geometry::{Polydisc, QuasiMetric, SplitPoint};
use anisoreg::kscover::{ks_select, ks_witness_check, QuasiMetricSpace};
use anisoreg::regularity::{
    expansion_sweep, harnack_estimate, harnack_sweep, holder_fit, l1_linf_sweep, osc_decay, pinned_config,
    solve_pinned_family, stability_ratios, sup_bound_sweep, Branch, PairMode, RegularityReport, ScaleSweep,
    PINNED_SEED,
};
use anisoreg::solver::{
    bump_functions, check_truncation_subsolution, inner, residual, solve, solve_forced, weak_form, FluxModel,
    Manufactured, SolverConfig, DEFAULT_EPS,
};
use anisoreg::{BoundaryData, Grid, ScalarField, Sign, StructureParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FAMILY: usize = 10;
const GRIDS: [usize; 2] = [65, 129];

/// Frozen on the first run at both grids; `(nodes, max K̂)`.
const HARNACK_MAX: [(usize, f64); 2] = [(65, 1.449_370_732_981_177_8), (129, 1.491_406_989_470_007_5)];
/// Frozen on the first run; `(nodes, admissible centers, min δ̂_o, Σ δ̂_o)`.
/// Every admissible center accepts the first candidate `δ_o = 1`.
const EXPANSION_PINNED: [(usize, usize, f64, f64); 2] = [(65, 115, 1.0, 115.0), (129, 114, 1.0, 114.0)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Family {
    nodes: usize,
    fields: Vec<ScalarField>,
}

fn proto() -> StructureParams {
    StructureParams::prototype(2, 1, 1.5).unwrap()
}

fn main_points() -> Vec<Vec<f64>> {
    ScaleSweep::lattice(&[0.375, 0.5, 0.625], 2)
}

fn admissible(reports: &[RegularityReport]) -> impl Iterator<Item = &RegularityReport> {
    reports.iter().filter(|r| r.hypothesis)
}

fn exponent_algebra() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut disagree = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=6);
        let s = rng.gen_range(1..n);
        let p = rng.gen_range(1.0..2.0);
        if p <= 1.0 {
            continue;
        }
        let par = StructureParams::prototype(n, s, p).unwrap();
        let a = par.chi() > 0.0;
        let b = par.lambda_l(1.0).unwrap() > 0.0;
        let c = par.harmonic_mean() > 2.0 * n as f64 / (n as f64 + 1.0);
        if a != b || b != c {
            disagree += 1;
        }
    }
    let par = proto();
    let spot = (par.harmonic_mean() - 12.0 / 7.0).abs() <= 1e-12
        && (par.chi() - 1.0).abs() <= 1e-12
        && (par.lambda_l(1.0).unwrap() - 8.0 / 7.0).abs() <= 1e-12;
    let t = start.elapsed();
    outcome(
        disagree == 0 && spot && t < Duration::from_secs(1),
        format!("disagreements {disagree}, spot values {spot}, {t:.2?}"),
    )
}

fn solver_exactness() -> Outcome {
    let flux = FluxModel::prototype(1.5, DEFAULT_EPS);
    let cfg = SolverConfig::default();
    let start = Instant::now();
    let g = Grid::unit(2, 33, 1, 1.5).unwrap();
    let affine = |x: &[f64]| 1.0 + 0.5 * x[0] + 0.25 * x[1];
    let (u, _) = solve(&g, &BoundaryData::from_fn(&g, affine), &flux, &cfg).unwrap();
    let exact = ScalarField::from_fn(g.clone(), affine);
    let err = u
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let t = start.elapsed();

    let g = Grid::unit(2, 17, 1, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..20 {
        let lo: Vec<(usize, f64)> = g
            .boundary_nodes()
            .into_iter()
            .map(|i| (i, rng.gen_range(-1.0..1.0)))
            .collect();
        let hi: Vec<(usize, f64)> = lo.iter().map(|&(i, v)| (i, v + rng.gen_range(0.0..0.5))).collect();
        let lo = BoundaryData::new(&g, lo).unwrap();
        let hi = BoundaryData::new(&g, hi).unwrap();
        let (u1, _) = solve(&g, &lo, &flux, &cfg).unwrap();
        let (u2, _) = solve(&g, &hi, &flux, &cfg).unwrap();
        let mp = |u: &ScalarField, b: &BoundaryData| u.min() >= b.min() - 1e-8 && u.max() <= b.max() + 1e-8;
        let cmp = u1.values().iter().zip(u2.values()).all(|(a, b)| *a <= b + 1e-8);
        if !(mp(&u1, &lo) && mp(&u2, &hi) && cmp) {
            bad += 1;
        }
    }
    outcome(
        err <= 1e-8 && t < Duration::from_secs(5) && bad == 0,
        format!("affine error {err:.2e} in {t:.2?}, maximum/comparison failures {bad}/20"),
    )
}

fn mms_convergence() -> Outcome {
    let start = Instant::now();
    let flux = FluxModel::prototype(1.5, 1e-8);
    let cfg = SolverConfig::default();
    let mut errs = Vec::new();
    for nodes in [17, 33, 65] {
        let g = Grid::unit(2, nodes, 1, 1.5).unwrap();
        let m = Manufactured::Sine;
        let (u, _) = solve_forced(&g, &m.boundary(&g), &flux, &m.forcing_field(&g, 1e-8), &cfg).unwrap();
        let exact = m.exact_field(&g);
        errs.push(
            u.values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let t = start.elapsed();
    outcome(
        orders.iter().all(|&o| o >= 1.5) && t <= Duration::from_secs(120),
        format!(
            "errors {:?}, orders {orders:.3?}, {t:.2?}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn weak_form_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = rng.gen_range(1.1..1.95);
        let nodes = rng.gen_range(5..20);
        let g = Grid::unit(2, nodes, 1, p).unwrap();
        let params = StructureParams::prototype(2, 1, p).unwrap();
        let flux = FluxModel::prototype(p, DEFAULT_EPS);
        let u = ScalarField::new(g.clone(), (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let mut psi = ScalarField::new(g.clone(), (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        for i in g.boundary_nodes() {
            psi.values_mut()[i] = 0.0;
        }
        let r = residual(&u, &flux, &params).unwrap();
        let w = weak_form(&u, &psi, &flux).unwrap();
        worst = worst.max((inner(&r, &psi) + w).abs() / psi.sup_norm());
    }
    outcome(worst <= 1e-12, format!("max |<r,psi> + W| / |psi| = {worst:.2e}"))
}

fn truncation() -> Outcome {
    let g = Grid::unit(2, 65, 1, 1.5).unwrap();
    let flux = FluxModel::prototype(1.5, DEFAULT_EPS);
    let params = proto();
    let bc = BoundaryData::from_fn(&g, |x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x[1]).sin());
    let (u, rep) = solve(&g, &bc, &flux, &SolverConfig::default()).unwrap();
    let eta = residual(&u, &flux, &params).unwrap().sup_norm();
    let bumps = bump_functions(&g, 20, 5);
    let mut failures = 0;
    let mut checked = 0;
    for i in 1..=5 {
        let k = u.min() + i as f64 / 6.0 * (u.max() - u.min());
        for sign in [Sign::Plus, Sign::Minus] {
            let t = check_truncation_subsolution(&u, k, sign, &bumps, &flux, eta).unwrap();
            failures += t.failures();
            checked += t.entries.len();
        }
    }
    outcome(
        rep.converged && failures == 0,
        format!("{failures} failures over {checked} (level, sign, bump) triples"),
    )
}

fn quasi_metric() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    let point = |rng: &mut ChaCha8Rng| {
        SplitPoint::new(
            (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
    };
    for m in [1.0, 2.0] {
        for p in [1.2, 1.5, 1.8] {
            let q = QuasiMetric::new(m, p).unwrap();
            let gamma = 2f64.powf(2.0 / p - 1.0);
            for _ in 0..100_000 {
                let (x, y, z) = (point(&mut rng), point(&mut rng), point(&mut rng));
                let lhs = q.distance(&x, &z).unwrap();
                let rhs = gamma * (q.distance(&x, &y).unwrap() + q.distance(&y, &z).unwrap());
                if lhs > rhs * (1.0 + 1e-12) {
                    violations += 1;
                }
            }
        }
    }
    let t = start.elapsed();
    outcome(
        violations == 0 && t < Duration::from_secs(5),
        format!("{violations} violations over 6 x 1e5 triples, {t:.2?}"),
    )
}

fn harnack(families: &[Family]) -> (Outcome, f64) {
    let params = proto();
    let sweep = ScaleSweep::new(vec![0.05, 0.1, 0.2], main_points(), vec![1.0]).unwrap();
    let mut maxima = Vec::new();
    let mut nonfinite = 0;
    let mut keys = 0;
    let mut regress = true;
    for fam in families {
        let mut kmax: f64 = 0.0;
        for u in &fam.fields {
            for r in admissible(&harnack_sweep(u, &params, &sweep).unwrap()) {
                let k = r.constant("K").unwrap();
                keys += 1;
                if k.is_finite() {
                    kmax = kmax.max(k);
                } else {
                    nonfinite += 1;
                }
            }
        }
        let frozen = HARNACK_MAX.iter().find(|f| f.0 == fam.nodes).unwrap().1;
        regress &= (kmax - frozen).abs() <= 1e-9 * frozen;
        maxima.push(kmax);
    }
    let ratio = maxima[1] / maxima[0];
    let g = Grid::unit(2, 65, 1, 1.5).unwrap();
    let c = ScalarField::constant(g, 2.0);
    let kc = harnack_estimate(&c, &params, &SplitPoint::new(vec![0.5], vec![0.5]), 0.1, 1.0)
        .unwrap()
        .constant("K")
        .unwrap();
    let pass = nonfinite == 0 && keys > 0 && (0.5..=2.0).contains(&ratio) && kc == 1.0 && regress;
    (
        outcome(
            pass,
            format!(
                "{keys} admissible keys, {nonfinite} nonfinite; max K 65: {:?}, 129: {:?} (ratio {ratio:.3}); constant K = {kc}; regression {regress}",
                maxima[0], maxima[1]
            ),
        ),
        maxima.iter().cloned().fold(1.0, f64::max),
    )
}

fn sup_and_l1(families: &[Family]) -> Outcome {
    let params = proto();
    let ss = ScaleSweep::new(ScaleSweep::dyadic(3, 6), main_points(), vec![1.0]).unwrap();
    let ls = ScaleSweep::new(ScaleSweep::dyadic(5, 7), main_points(), vec![0.5]).unwrap();
    let (mut keys, mut nonfinite) = (0, 0);
    let (mut sstab, mut lstab): (f64, f64) = (0.0, 0.0);
    for fam in families {
        for u in &fam.fields {
            let sr = sup_bound_sweep(u, &params, &ss, 1.0).unwrap();
            let lr = l1_linf_sweep(u, &params, &ls).unwrap();
            for r in admissible(&sr)
                .chain(admissible(&lr))
                .filter(|r| r.branch == Branch::Main)
            {
                keys += 1;
                if !r.constant("gamma").is_some_and(f64::is_finite) {
                    nonfinite += 1;
                }
            }
            sstab = stability_ratios(&sr, "gamma").iter().map(|s| s.1).fold(sstab, f64::max);
            lstab = stability_ratios(&lr, "gamma").iter().map(|s| s.1).fold(lstab, f64::max);
        }
    }
    outcome(
        keys > 0 && nonfinite == 0 && sstab <= 4.0 && lstab <= 4.0,
        format!("{keys} admissible keys, {nonfinite} nonfinite; stability sup {sstab:.3}, l1linf {lstab:.3}"),
    )
}

fn expansion(families: &[Family]) -> Outcome {
    let params = proto();
    let sweep = ScaleSweep::new(
        vec![1.0 / 16.0],
        ScaleSweep::lattice(&[0.25, 0.375, 0.5, 0.625, 0.75], 2),
        vec![1.0],
    )
    .unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for fam in families {
        let (mut count, mut min, mut sum, mut zero) = (0, f64::INFINITY, 0.0, 0);
        for u in &fam.fields {
            let reps = expansion_sweep(u, &params, &sweep, 0.5, 0.25, params.c()).unwrap();
            for r in admissible(&reps).filter(|r| r.branch == Branch::Main) {
                let d = r.constant("delta_o").unwrap_or(0.0);
                count += 1;
                if d > 0.0 {
                    min = min.min(d);
                    sum += d;
                } else {
                    zero += 1;
                }
            }
        }
        let frozen = EXPANSION_PINNED.iter().find(|f| f.0 == fam.nodes).unwrap();
        let regress = count == frozen.1 && min == frozen.2 && (sum - frozen.3).abs() <= 1e-12 * frozen.3.max(1.0);
        pass &= count > 0 && zero == 0 && regress;
        lines.push(format!(
            "{}: {count} centers, {zero} without delta_o, min {min}, sum {sum:?}, regression {regress}",
            fam.nodes
        ));
    }
    outcome(pass, lines.join("; "))
}

fn oscillation(families: &[Family], k: f64) -> Outcome {
    let params = proto();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let centers: Vec<SplitPoint> = (0..10)
        .map(|_| SplitPoint::new(vec![rng.gen_range(0.35..0.65)], vec![rng.gen_range(0.35..0.65)]))
        .collect();
    let (mut runs, mut failures, mut errors, mut levels) = (0, 0, 0, usize::MAX);
    for fam in families {
        for u in &fam.fields {
            for y in &centers {
                match osc_decay(u, &params, y, k, 1.0) {
                    Ok(r) => {
                        runs += 1;
                        failures += usize::from(!r.pass);
                        levels = levels.min(r.series.len());
                    }
                    Err(_) => errors += 1,
                }
            }
        }
    }
    outcome(
        failures == 0 && errors == 0 && runs > 0,
        format!("K = {k:.6}; {runs} runs, {failures} failures, {errors} errors, at least {levels} levels each"),
    )
}

fn holder(families: &[Family]) -> Outcome {
    let params = proto();
    let region = Polydisc::at(&[0.5, 0.5], 1, 0.25, 0.25).unwrap();
    let (mut amin, mut amax, mut viol) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    let mut missing = 0;
    for fam in families {
        for (i, u) in fam.fields.iter().enumerate() {
            let fit = holder_fit(u, &params, &region, 20_000, 7 + i as u64, PairMode::Mixed).unwrap();
            match fit.alpha {
                Some(a) => {
                    amin = amin.min(a);
                    amax = amax.max(a);
                }
                None => missing += 1,
            }
            viol += fit.violations(u, 1000, 1000 + i as u64, PairMode::Mixed, 1.1).unwrap();
        }
    }
    let g = Grid::unit(2, 65, 1, 1.5).unwrap();
    let c = ScalarField::constant(g, 3.0);
    let deg = holder_fit(&c, &params, &region, 1000, 1, PairMode::Mixed).unwrap();
    let degenerate = deg.alpha.is_none() && deg.max_diff == 0.0;
    outcome(
        missing == 0 && amin > 0.1 && amax <= 1.0 && viol == 0 && degenerate,
        format!("alpha in [{amin:.3}, {amax:.3}], fresh violations {viol}, constant field exact zero {degenerate}"),
    )
}

fn ks_oracle(space: &QuasiMetricSpace, u: &[f64], beta: f64) -> f64 {
    let n = space.len();
    let mut best = f64::INFINITY;
    for r in space.dyadic_radii() {
        for x in (0..n).filter(|&x| space.in_unit_ball(x) && u[x] > 0.0) {
            let ball: Vec<usize> = (0..n).filter(|&y| space.distance(x, y) < r).collect();
            if ball.iter().any(|&y| !space.in_unit_ball(y)) {
                continue;
            }
            let sup = ball.iter().map(|&y| u[y]).fold(f64::NEG_INFINITY, f64::max);
            best = best.min((r.powf(beta) * sup).max(1.0 / (r.powf(beta) * u[x])));
        }
    }
    best
}

fn ks_selection() -> Outcome {
    let start = Instant::now();
    let space = QuasiMetricSpace::lattice(8, &QuasiMetric::new(1.0, 1.5).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut worst, mut bad_witness): (f64, usize) = (0.0, 0);
    for _ in 0..50 {
        let beta = rng.gen_range(0.5..2.0);
        let mut u: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(0.0..4.0)).collect();
        u[space.base()] = rng.gen_range(1.0..4.0);
        let sel = ks_select(&space, &u, beta).unwrap();
        worst = worst.max(sel.omega / ks_oracle(&space, &u, beta));
        bad_witness += usize::from(ks_witness_check(&space, &u, beta, &sel).is_err());
    }
    let t = start.elapsed();
    outcome(
        worst <= 1.05 && bad_witness == 0 && t < Duration::from_secs(30),
        format!("max omega / optimum {worst:.6}, witness failures {bad_witness}, {t:.2?}"),
    )
}

fn run_all(dir: &Path, config: &Path) -> Vec<(String, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_anisoreg"))
        .args(["all", "--config"])
        .arg(config)
        .arg("--out")
        .arg(dir)
        .args(["--seed", "42"])
        .status()
        .unwrap();
    assert!(status.code().is_some());
    let mut csvs: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    csvs.sort();
    csvs
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.ini");
    std::fs::write(
        &config,
        "[equation]\nn = 2\ns = 1\np = 1.5\n[grid]\nnodes = 33\n[mms]\nnodes = 9, 17\n",
    )
    .unwrap();
    let a = run_all(&tmp.path().join("a"), &config);
    let b = run_all(&tmp.path().join("b"), &config);
    let same = !a.is_empty() && a == b;
    outcome(same, format!("{} CSV files compared, identical {same}", a.len()))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut timed = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let line = (id, name, o, t.elapsed());
        println!(
            "[{}] criterion {:>2} {}: {} ({:.2?})",
            if line.2.pass { "PASS" } else { "FAIL" },
            line.0,
            line.1,
            line.2.detail,
            line.3
        );
        results.push(line);
    };
    timed(1, "exponent algebra", &mut exponent_algebra);
    timed(2, "solver exactness", &mut solver_exactness);
    timed(3, "manufactured convergence", &mut mms_convergence);
    timed(4, "weak-form duality", &mut weak_form_duality);
    timed(5, "truncation inequality", &mut truncation);
    timed(6, "quasi-metric", &mut quasi_metric);

    let t = Instant::now();
    let families: Vec<Family> = GRIDS
        .iter()
        .map(|&nodes| Family {
            nodes,
            fields: solve_pinned_family(nodes, FAMILY, PINNED_SEED, &pinned_config(nodes)).unwrap(),
        })
        .collect();
    let solve_time = t.elapsed();
    let mut kmax = 1.0;
    timed(7, "harnack sweep", &mut || {
        let (o, k) = harnack(&families);
        kmax = k;
        outcome(
            o.pass && t.elapsed() <= Duration::from_secs(180),
            format!("{}; family solve {solve_time:.2?}", o.detail),
        )
    });
    timed(8, "sup and L1-Linf sweeps", &mut || sup_and_l1(&families));
    timed(9, "expansion of positivity", &mut || expansion(&families));
    timed(10, "oscillation decay", &mut || oscillation(&families, kmax));
    timed(11, "holder fit", &mut || holder(&families));
    timed(12, "ks selection", &mut ks_selection);
    timed(13, "determinism", &mut determinism);

    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
