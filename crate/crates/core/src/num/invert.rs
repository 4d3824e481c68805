//! Monotone root finding: bisection with geometric bracket growth.

use crate::error::{Error, Result};

/// Solve `f(x) = target` for strictly increasing `f` on `[lo, hi]`.
///
/// `f(lo) ≤ target ≤ f(hi)` is required (checked).  Terminates when the
/// bracket width falls below `rtol` relative to the magnitude of the
/// endpoints (with an absolute floor of `rtol` for brackets around zero).
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, target: f64, rtol: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty bracket [{lo}, {hi}]")));
    }
    let flo = f(lo);
    let fhi = f(hi);
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::numeric("bracket endpoint evaluated to NaN"));
    }
    if !(flo <= target && target <= fhi) {
        return Err(Error::invalid(format!(
            "target {target:.6e} outside bracket values [{flo:.6e}, {fhi:.6e}]"
        )));
    }
    let mut a = lo;
    let mut b = hi;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            break;
        }
        // Width below relative tolerance (absolute floor rtol near zero).
        if (b - a) <= rtol * a.abs().max(b.abs()).max(rtol) {
            break;
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::numeric(format!("function NaN at {mid:.6e} during bisection")));
        }
        if fm < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Grow a bracket for `f(x) = target` with increasing `f`, starting from
/// `x0 > 0` and expanding geometrically in the indicated direction
/// (`up = true` grows `x`, `false` shrinks toward 0).  Returns `(lo, hi)`
/// with `f(lo) ≤ target ≤ f(hi)`.
pub fn grow_bracket<F: Fn(f64) -> f64>(f: F, x0: f64, target: f64, up: bool, max_steps: u32) -> Result<(f64, f64)> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::invalid("bracket seed must be positive and finite"));
    }
    let f0 = f(x0);
    if f0.is_nan() {
        return Err(Error::numeric("bracket seed evaluated to NaN"));
    }
    if f0 == target {
        return Ok((x0, x0));
    }
    let need_larger = f0 < target;
    if need_larger != up {
        return Err(Error::invalid(format!(
            "bracket growth direction inconsistent: f({x0:.3e}) = {f0:.3e} vs target {target:.3e}"
        )));
    }
    let mut prev = x0;
    let mut x = x0;
    for _ in 0..max_steps {
        x = if up { x * 2.0 } else { x * 0.5 };
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::numeric(format!("function NaN at {x:.6e} during bracket growth")));
        }
        let crossed = if up { fx >= target } else { fx <= target };
        if crossed {
            return Ok(if up { (prev, x) } else { (x, prev) });
        }
        prev = x;
    }
    Err(Error::numeric(format!(
        "no bracket for target {target:.6e} within {max_steps} geometric steps from {x0:.6e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root() {
        let x = bisect_increasing(|x| x * x * x, 0.0, 4.0, 27.0f64.cbrt().powi(3), 1e-14).unwrap();
        assert!((x - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_growth_up_and_down() {
        let (lo, hi) = grow_bracket(|x| x.ln(), 1.0, 3.0, true, 60).unwrap();
        assert!(lo.ln() <= 3.0 && 3.0 <= hi.ln());
        let (lo, hi) = grow_bracket(|x| x.ln(), 1.0, -3.0, false, 60).unwrap();
        assert!(lo.ln() <= -3.0 && -3.0 <= hi.ln());
    }

    #[test]
    fn rejects_target_outside_bracket() {
        assert!(bisect_increasing(|x| x, 0.0, 1.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn rejects_wrong_direction() {
        assert!(grow_bracket(|x| x, 1.0, 0.5, true, 10).is_err());
    }
}
