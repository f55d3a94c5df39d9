//! Adaptive Simpson quadrature, 1-D and iterated 2-D.
//!
//! The integrands here (pointwise minima of smooth densities) are piecewise
//! smooth with a handful of kinks, which adaptive bisection handles by
//! concentrating subdivisions around the crossing points. Each accepted
//! panel applies the usual Richardson correction `(S2 - S1) / 15`.

use crate::error::{Error, Result};

/// Hard recursion cap; tolerance halves per level, so hitting this bound
/// means the integrand is not converging rather than merely hard.
const MAX_DEPTH: u32 = 60;

fn simpson(h: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    // interval exhausted at float resolution: accept what we have
    if lm <= a || rm <= m {
        return Ok(whole);
    }
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(m - a, fa, flm, fm);
    let right = simpson(b - m, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNotConverged {
            tol,
            err: delta.abs(),
        });
    }
    let half_tol = 0.5 * tol;
    Ok(adapt(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + adapt(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}

/// Integrate `f` over `[lo, hi]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidParameter(format!(
            "bad integration interval [{lo}, {hi}]"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad quadrature tolerance {tol}"
        )));
    }
    let m = 0.5 * (lo + hi);
    let fa = f(lo);
    let fm = f(m);
    let fb = f(hi);
    let whole = simpson(hi - lo, fa, fm, fb);
    adapt(&f, lo, hi, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Iterated 2-D integration over an axis-aligned box: the inner dimension is
/// integrated to `inner_tol` for each outer evaluation point.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    xlo: f64,
    xhi: f64,
    ylo: f64,
    yhi: f64,
    outer_tol: f64,
    inner_tol: f64,
) -> Result<f64> {
    let inner_failure = std::cell::RefCell::new(None);
    let outer = |y: f64| match integrate(|x| f(x, y), xlo, xhi, inner_tol) {
        Ok(v) => v,
        Err(e) => {
            inner_failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let result = integrate(outer, ylo, yhi, outer_tol);
    if let Some(e) = inner_failure.into_inner() {
        return Err(e);
    }
    result
}
