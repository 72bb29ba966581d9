//! Bracketed, safeguarded Newton iteration for monotone scalar equations.
//!
//! Used for the incomplete-gamma inverse and for the `b_n` calibration
//! equation. The caller supplies a bracket on which the function changes
//! sign; every Newton step that leaves the bracket (or fails to shrink the
//! residual) is replaced by a bisection step, so the iteration cannot
//! diverge.

use crate::error::{Error, Result};

/// A converged root together with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Stopping rules for [`safeguarded_newton`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Stop once `|f(x)| <= abs_f`.
    pub abs_f: f64,
    /// Stop once the bracket is narrower than `rel_x * max(|x|, tiny)`.
    pub rel_x: f64,
    pub max_iter: usize,
}

const TRACE_LEN: usize = 8;

/// Solves `f(x) = 0` on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// `eval` returns `(f(x), f'(x))`.
pub fn safeguarded_newton<F>(
    what: &'static str,
    mut eval: F,
    mut lo: f64,
    mut hi: f64,
    start: f64,
    tol: Tolerance,
) -> Result<Root>
where
    F: FnMut(f64) -> (f64, f64),
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("{what}: invalid bracket [{lo}, {hi}]")));
    }
    let (f_lo, _) = eval(lo);
    let (f_hi, _) = eval(hi);
    if f_lo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Domain(format!(
            "{what}: bracket [{lo}, {hi}] does not enclose a root (f = {f_lo}, {f_hi})"
        )));
    }
    // orient so that f(lo) < 0 < f(hi)
    let increasing = f_lo < 0.0;

    let mut x = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    let mut trace = Vec::with_capacity(TRACE_LEN);
    let mut prev_abs = f64::INFINITY;

    for iter in 1..=tol.max_iter {
        let (fx, dfx) = eval(x);
        if trace.len() == TRACE_LEN {
            trace.remove(0);
        }
        trace.push(x);
        if !fx.is_finite() {
            return Err(Error::NonConvergence { what, iterations: iter, trace });
        }
        if fx.abs() <= tol.abs_f {
            return Ok(Root { x, residual: fx, iterations: iter });
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol.rel_x * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(Root { x, residual: fx, iterations: iter });
        }

        let newton = x - fx / dfx;
        let shrinking = fx.abs() < 0.5 * prev_abs;
        prev_abs = fx.abs();
        x = if dfx != 0.0 && newton.is_finite() && newton > lo && newton < hi && (shrinking || iter == 1) {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NonConvergence { what, iterations: tol.max_iter, trace })
}
