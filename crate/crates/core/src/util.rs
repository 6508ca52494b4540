use rayon::prelude::*;

/// Chunk size for reductions; fixed so sums do not depend on thread count.
const CHUNK: usize = 2048;

/// Sum of `f(i)` over `0..len` with a reduction order independent of the
/// thread pool.
pub(crate) fn det_sum(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            (c * CHUNK..end).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

pub(crate) fn det_max(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    (0..len).into_par_iter().map(&f).reduce(|| 0.0, f64::max)
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, r²)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some((my - slope * mx, slope, r2))
}
