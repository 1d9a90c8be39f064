//! Safeguarded root finding for monotone functions.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: u32,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f = {f_lo} and {f_hi}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("function is not finite at x = {0}")]
    NonFinite(f64),
}

/// Finds `x` in `[lo, hi]` with `|f(x)| < f_tol` for `f` decreasing with
/// `f(lo) > 0 > f(hi)`. Newton steps are taken from the bracket midpoint side
/// when they stay inside the bracket; bisection otherwise. `df` may return
/// `None` to force bisection.
pub fn decreasing_root<F, D>(f: F, df: D, lo: f64, hi: f64, f_tol: f64, max_iter: u32) -> Result<Root, RootError>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> Option<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let (f_lo, f_hi) = (f(lo), f(hi));
    for (x, v) in [(lo, f_lo), (hi, f_hi)] {
        if !v.is_finite() {
            return Err(RootError::NonFinite(x));
        }
    }
    if f_lo.abs() < f_tol {
        return Ok(Root { x: lo, value: f_lo, iterations: 0, bracket: (lo, hi) });
    }
    if f_hi.abs() < f_tol {
        return Ok(Root { x: hi, value: f_hi, iterations: 0, bracket: (lo, hi) });
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(RootError::NotBracketed { lo, hi, f_lo, f_hi });
    }
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    for it in 1..=max_iter {
        let v = f(x);
        if !v.is_finite() {
            return Err(RootError::NonFinite(x));
        }
        if v.abs() < best.1.abs() {
            best = (x, v);
        }
        if v.abs() < f_tol {
            return Ok(Root { x, value: v, iterations: it, bracket: (lo, hi) });
        }
        if v > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = df(x).filter(|d| *d < 0.0 && d.is_finite()).map(|d| x - v / d);
        x = match newton {
            Some(n) if n > lo && n < hi => n,
            _ => 0.5 * (lo + hi),
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(Root { x: best.0, value: best.1, iterations: max_iter, bracket: (lo, hi) })
}
