//! Red-black nonlinear Gauss-Seidel warm-up, then iterations pairing a
//! majorize-minimize step with one more sweep. The step solves a weighted
//! Laplacian system (Jacobi-preconditioned CG) whose quadratic lies above the
//! functional; the sweep cleans up nodes where the weights blow up.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operator::Operator;
use super::{SolveReport, SolverConfig};
use crate::util::det_sum;

const WARMUP_SWEEPS: usize = 4;
const STALL_LIMIT: usize = 10;
const CG_TOL: f64 = 1e-2;
const CG_MAX_ITER: usize = 4000;
const ARMIJO: f64 = 1e-4;

pub(super) fn run(
    op: &Operator,
    mut u: Vec<f64>,
    forcing: Option<&[f64]>,
    cfg: &SolverConfig,
) -> (Vec<f64>, SolveReport) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gtol = 1e-3 * cfg.tol_residual;
    let mut energy = op.functional(&u, forcing);
    let mut history = vec![energy];
    let mut res = op.residual_max(&u, forcing);
    let mut sweeps = 0;
    let mut stalled = 0;
    let mut best = res;
    while res > cfg.tol_residual && sweeps < cfg.max_sweeps && stalled < STALL_LIMIT {
        let mut change = 0.0;
        if sweeps >= WARMUP_SWEEPS {
            change += majorize_step(op, &mut u, forcing).unwrap_or(0.0);
        }
        let old = u.clone();
        op.gauss_seidel_sweep(&mut u, forcing, gtol, rng.gen_bool(0.5));
        let du: Vec<f64> = u.iter().zip(&old).map(|(a, b)| a - b).collect();
        change += op.functional_change(&old, &du, forcing);
        sweeps += 1;
        energy += change;
        history.push(energy);
        let next = op.residual_max(&u, forcing);
        let rel = -change / energy.abs().max(f64::MIN_POSITIVE);
        if rel < cfg.tol_energy && next >= best {
            stalled += 1;
        } else {
            stalled = 0;
        }
        best = best.min(next);
        res = next;
    }
    let report = SolveReport {
        sweeps,
        residual: res,
        energy: op.functional(&u, forcing),
        converged: res <= cfg.tol_residual,
        wall_time: start.elapsed(),
        energy_history: history,
    };
    (u, report)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    det_sum(a.len(), |i| a[i] * b[i])
}

/// Moves to the minimizer of the quadratic with face weights `A(ξ)/ξ`,
/// which touches the functional at `u` and lies above it everywhere, so the
/// functional cannot increase. Backtracks only to absorb rounding. Returns
/// the functional change, or `None` if no decrease was found.
fn majorize_step(op: &Operator, u: &mut [f64], forcing: Option<&[f64]>) -> Option<f64> {
    // the gradient of functional / vol is -r
    let r = op.residual(u, forcing);
    let w = op.face_secant(u);
    let diag = op.weighted_diag(&w);
    let d = pcg(op, &w, &diag, &r);
    let slope = -dot(&r, &d);
    if !(slope < 0.0) {
        return None;
    }
    let vol = op.grid().cell_volume();
    let mut step = vec![0.0; u.len()];
    let mut alpha = 1.0;
    for _ in 0..30 {
        step.iter_mut().zip(&d).for_each(|(s, v)| *s = alpha * v);
        let dj = op.functional_change(u, &step, forcing);
        if dj <= ARMIJO * alpha * vol * slope {
            u.iter_mut().zip(&step).for_each(|(x, s)| *x += s);
            return Some(dj);
        }
        alpha *= 0.5;
    }
    None
}

fn pcg(op: &Operator, dfl: &[Vec<f64>], diag: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return x;
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for _ in 0..CG_MAX_ITER {
        op.weighted_apply(dfl, &p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if dot(&r, &r).sqrt() <= CG_TOL * b_norm {
            break;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}
