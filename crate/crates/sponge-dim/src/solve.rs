//! Bracketed scalar root finding.
//!
//! All solves in this crate are one-dimensional roots of strictly monotone
//! functions, so a bracket plus safeguarded Newton (midpoint fallback) is both
//! fast and impossible to throw outside its interval.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Outcome of a bracketed root solve.
#[derive(Debug, Clone, Copy)]
pub struct RootSolve<R: Real> {
    pub x: R,
    /// Function value at `x`.
    pub residual: R,
    pub iterations: usize,
    /// Whether the residual target (or, for a nonpositive target, bracket
    /// collapse) was reached.
    pub converged: bool,
}

/// Finds the root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite (or zero) signs. `f` returns `(value, derivative)`; a derivative
/// of zero (or a Newton step escaping the bracket) falls back to bisection,
/// so a caller without derivatives can simply return zero.
///
/// Iteration stops when `|value| <= residual_tol` or the bracket width shrinks
/// to a few ulps; the best point seen is returned either way, with `converged`
/// reporting whether the residual target was met. A nonpositive
/// `residual_tol` requests the tightest solve floating point allows: the
/// result then counts as converged once the bracket collapses to ulp width.
pub fn bracketed_root<R: Real>(
    mut lo: R,
    mut hi: R,
    mut f_lo: R,
    f_hi: R,
    f: impl Fn(R) -> (R, R),
    residual_tol: R,
    max_iter: usize,
) -> RootSolve<R> {
    debug_assert!(lo <= hi);
    debug_assert!(
        f_lo * f_hi <= R::zero(),
        "bracketed_root requires a sign change"
    );

    if f_lo.abs() <= residual_tol && f_lo.abs() <= f_hi.abs() {
        return RootSolve {
            x: lo,
            residual: f_lo,
            iterations: 0,
            converged: true,
        };
    }
    if f_hi.abs() <= residual_tol {
        return RootSolve {
            x: hi,
            residual: f_hi,
            iterations: 0,
            converged: true,
        };
    }

    let mut best_x = if f_lo.abs() <= f_hi.abs() { lo } else { hi };
    let mut best_v = if f_lo.abs() <= f_hi.abs() { f_lo } else { f_hi };
    let mut x = (lo + hi) / R::of(2.0);
    let mut iterations = 0usize;
    let mut collapsed = false;

    while iterations < max_iter {
        let (v, d) = f(x);
        iterations += 1;
        if !v.is_finite() {
            // Inner evaluation failed; report the best point seen so the
            // caller can surface its own error.
            break;
        }
        if v.abs() < best_v.abs() {
            best_v = v;
            best_x = x;
        }
        if v.abs() <= residual_tol {
            break;
        }
        // Keep the sign change inside [lo, hi].
        if (v > R::zero()) == (f_lo > R::zero()) {
            lo = x;
            f_lo = v;
        } else {
            hi = x;
        }
        let width = hi - lo;
        let scale = R::one().max(lo.abs()).max(hi.abs());
        if width <= R::epsilon() * scale * R::of(4.0) {
            collapsed = true;
            break;
        }
        let newton = x - v / d;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / R::of(2.0)
        };
    }

    let machine_tight = residual_tol <= R::zero();
    RootSolve {
        x: best_x,
        residual: best_v,
        iterations,
        converged: best_v.abs() <= residual_tol || (machine_tight && collapsed),
    }
}

/// Expands a symmetric bracket around `start` until `f` changes sign.
///
/// The half-width starts at `initial_step` and doubles; if it exceeds `cap`
/// without producing a sign change the solve is abandoned with
/// [`Error::BracketNotFound`] rather than clamped. Returns
/// `(lo, hi, f(lo), f(hi))`.
pub fn expand_bracket<R: Real>(
    f: impl Fn(R) -> R,
    start: R,
    initial_step: R,
    cap: R,
    context: &str,
) -> Result<(R, R, R, R)> {
    let mut step = initial_step;
    loop {
        let lo = start - step;
        let hi = start + step;
        let f_lo = f(lo);
        let f_hi = f(hi);
        if !f_lo.is_finite() || !f_hi.is_finite() {
            return Err(Error::NonConvergence(format!(
                "{context}: non-finite value while bracketing at half-width {step:e}"
            )));
        }
        if f_lo * f_hi <= R::zero() {
            return Ok((lo, hi, f_lo, f_hi));
        }
        step = step * R::of(2.0);
        if step > cap {
            return Err(Error::BracketNotFound(format!(
                "{context}: no sign change within half-width {cap:e} of {start:e}"
            )));
        }
    }
}

/// Ordinary least squares fit `y = slope * x + intercept`.
///
/// Returns `(slope, intercept, slope_std_error)`; the standard error is zero
/// when there are fewer than three points (no residual degrees of freedom).
pub fn fit_line<R: Real>(xs: &[R], ys: &[R]) -> Result<(R, R, R)> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::Precondition(format!(
            "line fit needs at least two matched points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let nr = R::of(n as f64);
    let mean = |v: &[R]| v.iter().fold(R::zero(), |s, &x| s + x) / nr;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = R::zero();
    let mut sxy = R::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    if sxx == R::zero() {
        return Err(Error::Precondition(
            "line fit needs at least two distinct abscissae".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n < 3 {
        R::zero()
    } else {
        let mut ss_res = R::zero();
        for (&x, &y) in xs.iter().zip(ys) {
            let r = y - (slope * x + intercept);
            ss_res = ss_res + r * r;
        }
        (ss_res / (R::of((n - 2) as f64) * sxx)).sqrt()
    };
    Ok((slope, intercept, stderr))
}
