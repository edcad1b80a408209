//! Scalar root finding and maximization.

use rayon::prelude::*;

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 400;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bisection for a sign change of `f` on [lo, hi]. Stops when the bracket is
/// narrower than `tol` or an exact zero is hit.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Numerical {
            what: "bisection",
            detail: format!("no sign change on [{lo:e}, {hi:e}]: f = {f_lo:e}, {f_hi:e}"),
        });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for a maximum of `f` on [a, b].
pub fn golden_max<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Maximizes `f` on [lo, hi] by an `n`-point uniform scan (evaluated in
/// parallel, reduced in index order) followed by golden-section refinement
/// on the bracket around the best scan point. The endpoints are part of the
/// scan, so an endpoint maximum is found exactly.
pub fn scan_refine_max<F>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let n = n.max(3);
    let point = |i: usize| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| f(point(i)))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let (mut x_best, mut f_best) = (point(best), values[best]);
    let a = point(best.saturating_sub(1));
    let b = point((best + 1).min(n - 1));
    let (x, fx) = golden_max(&f, a, b, tol)?;
    if fx > f_best {
        x_best = x;
        f_best = fx;
    }
    Ok((x_best, f_best))
}
