//! The variance-weighted change of time
//! `f(t) = ∫_{1/2}^t C^{1/α}(s) ds` and its inverse.
//!
//! `f` rescales time so that the standardized process has unit local
//! structure: partitions that are uniform in `f`-scale are the natural
//! cells for both the asymptotic constant and the pairwise regularity
//! checks.  Near a singular endpoint `C` may blow up; all quadrature
//! within a quarter of such an end runs in the endpoint-local coordinate
//! `x = −ln t` (or `−ln(1−t)`), where power singularities become plain
//! exponentials.

use crate::error::{Error, Result};
use crate::model::integrand::{CShapeEval, TrendWeightedTail};
use crate::model::trend::TrendFunction;
use crate::model::variance::LocalVariance;
use crate::model::Side;
use crate::num::{adaptive, integrate_tail, Finiteness, QuadOptions, TailOptions, TailOutcome};
use serde::Serialize;

/// `−ln(1/4)`: the endpoint-local coordinate of the anchor points `1/4`
/// and `3/4` beyond which integration switches to the local coordinate.
pub(crate) const ANCHOR_X: f64 = 1.3862943611198906;

const ANCHOR_LO: f64 = 0.25;
const ANCHOR_HI: f64 = 0.75;

/// `∫_a^b C^{1/α}(s) ds` for `0 < a ≤ b < 1`, split at the anchors.
pub(crate) fn integrate_c(shape: &CShapeEval, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    if !(a > 0.0 && b < 1.0 && a <= b) {
        return Err(Error::invalid(format!("need 0 < a <= b < 1, got ({a}, {b})")));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let m = b.min(ANCHOR_LO);
    if a < m {
        // t = e^{-x}: [a, m] maps to x in [−ln m, −ln a], orientation flips.
        total += adaptive(|x| shape.density_near(Side::Lo, x), -m.ln(), -a.ln(), opts)?.value;
    }
    let (ca, cb) = (a.max(ANCHOR_LO), b.min(ANCHOR_HI));
    if ca < cb {
        total += adaptive(|t| shape.at_t(t), ca, cb, opts)?.value;
    }
    let m = a.max(ANCHOR_HI);
    if m < b {
        // t = 1 − e^{-x}: [m, b] maps to x in [−ln(1−m), −ln(1−b)].
        total += adaptive(|x| shape.density_near(Side::Hi, x), -(1.0 - m).ln(), -(1.0 - b).ln(), opts)?.value;
    }
    Ok(total)
}

pub(crate) fn f_from_shape(shape: &CShapeEval, t: f64, opts: &QuadOptions) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!("the change of time is defined on (0, 1), got t = {t}")));
    }
    if t == 0.5 {
        Ok(0.0)
    } else if t < 0.5 {
        Ok(-integrate_c(shape, t, 0.5, opts)?)
    } else {
        integrate_c(shape, 0.5, t, opts)
    }
}

/// `f(t) = ∫_{1/2}^t C^{1/α}(s) ds`.
pub fn f_transform(c: &LocalVariance, alpha: f64, t: f64, opts: &QuadOptions) -> Result<f64> {
    let shape = CShapeEval::new(c, alpha)?;
    f_from_shape(&shape, t, opts)
}

/// Classified behaviour of `f` toward the two ends of `(0, 1)`.
///
/// A side's `verdict` is [`Finiteness::Infinite`] when `f` diverges toward
/// that end; when finite, `value` holds the mass between the end and the
/// anchor (`∫_0^{1/4}` resp. `∫_{3/4}^1 C^{1/α}`).
#[derive(Clone, Debug, Serialize)]
pub struct FLimits {
    pub lo: TailOutcome,
    pub hi: TailOutcome,
}

impl FLimits {
    pub fn side(&self, side: Side) -> &TailOutcome {
        match side {
            Side::Lo => &self.lo,
            Side::Hi => &self.hi,
        }
    }
}

/// Classify `f(0+)` and `f(1−)` as finite or infinite.
pub fn f_limits(c: &LocalVariance, alpha: f64, opts: &TailOptions) -> Result<FLimits> {
    let shape = CShapeEval::new(c, alpha)?;
    let zero = TrendFunction::zero();
    let tail = |side: Side| TrendWeightedTail { shape: &shape, trend: &zero, gpow: 0.0, side };
    Ok(FLimits {
        lo: integrate_tail(&tail(Side::Lo), ANCHOR_X, opts)?,
        hi: integrate_tail(&tail(Side::Hi), ANCHOR_X, opts)?,
    })
}

/// Residual-checked bisection for `f(t) = y` on the logistic parametrization
/// `t = σ(ξ)`, which keeps the search bracket finite on both sides.
pub(crate) fn f_inverse_shape(shape: &CShapeEval, y: f64, opts: &QuadOptions) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::invalid(format!("inverse target must be finite, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.5);
    }
    let t_of = |xi: f64| -> f64 {
        if xi >= 0.0 {
            1.0 / (1.0 + (-xi).exp())
        } else {
            let e = xi.exp();
            e / (1.0 + e)
        }
    };
    let f_of = |xi: f64| -> Result<f64> {
        let t = t_of(xi);
        if t <= 0.0 {
            Ok(f64::NEG_INFINITY)
        } else if t >= 1.0 {
            Ok(f64::INFINITY)
        } else {
            f_from_shape(shape, t, opts)
        }
    };

    // Grow a bracket [lo, hi] with f(σ(lo)) ≤ y ≤ f(σ(hi)).
    let (mut lo, mut hi);
    if y > 0.0 {
        lo = 0.0;
        hi = 1.0;
        while f_of(hi)? < y {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::numeric("inverse bracket failed to close"));
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while f_of(lo)? > y {
            hi = lo;
            lo *= 2.0;
            if lo < -1e6 {
                return Err(Error::numeric("inverse bracket failed to close"));
            }
        }
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f_of(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
    }
    let xi = 0.5 * (lo + hi);
    let t = t_of(xi);
    let residual = (f_of(xi)? - y).abs();
    // One float-spacing step at t moves f by C^{1/α}(t)·ε·t; no representable
    // answer can beat that, so the acceptable residual must include it (it
    // dominates toward t → 1, where the spacing of 1−t is absolute).
    let grain = shape.at_t(t) * f64::EPSILON * t;
    if !(t > 0.0 && t < 1.0) || residual > (1e-8 * y.abs().max(1.0)).max(8.0 * grain) {
        return Err(Error::numeric(format!(
            "inverse target {y} lies beyond the resolution of t in (0, 1) (residual {residual:.3e})"
        )));
    }
    Ok(t)
}

/// Solve `f(t) = y` for `t ∈ (0, 1)`.
pub fn f_inverse(c: &LocalVariance, alpha: f64, y: f64, opts: &QuadOptions) -> Result<f64> {
    let shape = CShapeEval::new(c, alpha)?;
    f_inverse_shape(&shape, y, opts)
}

/// Partition points `t_j = f^{-1}(∓ j·d)`, `j = 1..=j_max`, marching toward
/// the requested end.  Requires `f` to diverge toward that end (otherwise
/// only finitely many cells exist and the uniform-in-`f` partition is not
/// defined); points are returned in marching order.
pub fn partition_points(
    c: &LocalVariance,
    alpha: f64,
    d: f64,
    side: Side,
    j_max: usize,
    qopts: &QuadOptions,
    topts: &TailOptions,
) -> Result<Vec<f64>> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::invalid(format!("cell width must be positive, got {d}")));
    }
    if j_max == 0 || j_max > 10_000 {
        return Err(Error::invalid(format!("partition depth must lie in 1..=10000, got {j_max}")));
    }
    let shape = CShapeEval::new(c, alpha)?;
    let zero = TrendFunction::zero();
    let lim = integrate_tail(&TrendWeightedTail { shape: &shape, trend: &zero, gpow: 0.0, side }, ANCHOR_X, topts)?;
    match lim.verdict {
        Finiteness::Infinite => {}
        Finiteness::Finite => {
            return Err(Error::not_applicable(format!(
                "the change of time stays bounded toward the {side} end; no uniform partition in that direction"
            )));
        }
        Finiteness::Inconclusive => {
            return Err(Error::numeric(format!(
                "could not classify the change of time toward the {side} end: {}",
                lim.note
            )));
        }
    }
    let sign = match side {
        Side::Lo => -1.0,
        Side::Hi => 1.0,
    };
    (1..=j_max)
        .map(|j| f_inverse_shape(&shape, sign * (j as f64) * d, qopts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn q() -> QuadOptions {
        QuadOptions::default()
    }

    fn bridge_c() -> LocalVariance {
        LocalVariance::power_shape(0.5, 1.0, 1.0).unwrap()
    }

    fn fbm_c(h: f64) -> LocalVariance {
        LocalVariance::power_shape(0.5, 2.0 * h, 0.0).unwrap()
    }

    #[test]
    fn bridge_f_is_half_log_odds() {
        // ∫_{1/2}^t ds/(2s(1−s)) = ½ ln(t/(1−t)).
        for &t in &[0.02f64, 0.25, 0.5, 0.75, 0.9999] {
            let want = 0.5 * (t / (1.0 - t)).ln();
            let got = f_transform(&bridge_c(), 1.0, t, &q()).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12, epsilon = 1e-14);
        }
        let got = f_transform(&bridge_c(), 1.0, 0.75, &q()).unwrap();
        assert_relative_eq!(got, 0.549_306_144_334_054_9, max_relative = 1e-13);
    }

    #[test]
    fn fbm_f_is_scaled_log() {
        // C^{1/α} = 2^{-1/(2h)}/t, so f(t) = 2^{-1/(2h)} ln(2t).
        for &h in &[0.25, 0.5, 0.9] {
            let kappa = 2f64.powf(-1.0 / (2.0 * h));
            for &t in &[1e-6f64, 0.25, 0.8] {
                let want = kappa * (2.0 * t).ln();
                let got = f_transform(&fbm_c(h), 2.0 * h, t, &q()).unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-12, epsilon = 1e-14);
            }
        }
        let got = f_transform(&fbm_c(0.5), 1.0, 0.25, &q()).unwrap();
        assert_relative_eq!(got, -0.346_573_590_279_972_64, max_relative = 1e-13);
    }

    #[test]
    fn deep_arguments_stay_accurate() {
        // t = e^{-500} is far below anything a t-scale quadrature could
        // resolve; the local coordinate handles it to full precision.
        let t = (-500.0f64).exp();
        let got = f_transform(&bridge_c(), 1.0, t, &q()).unwrap();
        let want = 0.5 * (t.ln() - (-t).ln_1p()); // ½ ln(t/(1−t))
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn limits_classify_divergence() {
        let topts = TailOptions::default();
        // Bridge: f diverges toward both ends.
        let lim = f_limits(&bridge_c(), 1.0, &topts).unwrap();
        assert_eq!(lim.lo.verdict, Finiteness::Infinite);
        assert_eq!(lim.hi.verdict, Finiteness::Infinite);
        // fBm: diverges at 0, converges at 1 with mass ∫_{3/4}^1 κ/t dt.
        let lim = f_limits(&fbm_c(0.75), 1.5, &topts).unwrap();
        assert_eq!(lim.lo.verdict, Finiteness::Infinite);
        assert_eq!(lim.hi.verdict, Finiteness::Finite);
        let kappa = 2f64.powf(-1.0 / 1.5);
        assert_relative_eq!(lim.hi.value, kappa * (4f64 / 3.0).ln(), max_relative = 1e-9);
        // Constant variance: finite both ends, mass exactly 1/4.
        let lim = f_limits(&LocalVariance::constant(1.0).unwrap(), 1.0, &topts).unwrap();
        assert_eq!(lim.lo.verdict, Finiteness::Finite);
        assert_relative_eq!(lim.lo.value, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn inverse_round_trips() {
        let c = bridge_c();
        for &y in &[-7.0f64, -0.3, 0.0, 2.2, 7.0] {
            let t = f_inverse(&c, 1.0, y, &q()).unwrap();
            let back = f_transform(&c, 1.0, t, &q()).unwrap();
            assert_relative_eq!(back, y, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn inverse_reaches_resolution_limited_targets() {
        // For ½ ln(t/(1−t)) = y the exact inverse is the logistic 1/(1+e^{−2y}).
        // At y = 15 the solution sits ~9.4e-14 below 1, where one float step
        // moves f by ~6e-4; the inverse must still land on the right float.
        let c = bridge_c();
        for &y in &[-15.0f64, 12.0, 15.0] {
            let t = f_inverse(&c, 1.0, y, &q()).unwrap();
            let exact = if y < 0.0 {
                let e = (2.0 * y).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + (-2.0 * y).exp())
            };
            assert_relative_eq!(t, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn inverse_rejects_unreachable_targets() {
        // fBm's f is bounded above by f(1) = 2^{-1/(2h)} ln 2 < 1.
        let err = f_inverse(&fbm_c(0.75), 1.5, 5.0, &q()).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn partition_matches_closed_forms() {
        // Bridge, d = 1, lower side: t_j = 1/(1 + e^{2j}).
        let pts = partition_points(&bridge_c(), 1.0, 1.0, Side::Lo, 2, &q(), &TailOptions::default()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_relative_eq!(pts[1], 1.0 / (1.0 + 4f64.exp()), max_relative = 1e-9);
        assert_relative_eq!(pts[1], 0.017_986_209_962_091_555, max_relative = 1e-9);
        // fBm h = 1/2, d = 1/2: f = ½ ln(2t), so t_1 = e^{-1}/2.
        let pts = partition_points(&fbm_c(0.5), 1.0, 0.5, Side::Lo, 1, &q(), &TailOptions::default()).unwrap();
        assert_relative_eq!(pts[0], 0.183_939_720_585_721_17, max_relative = 1e-9);
    }

    #[test]
    fn partition_refuses_bounded_directions() {
        let err =
            partition_points(&fbm_c(0.75), 1.5, 1.0, Side::Hi, 3, &q(), &TailOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotApplicable(_)));
    }

    #[test]
    fn custom_profile_agrees_with_power_form() {
        let custom = LocalVariance::custom(Arc::new(|t: f64| 1.0 / (2.0 * t * (1.0 - t))));
        for &t in &[0.1, 0.5, 0.93] {
            let a = f_transform(&custom, 1.0, t, &q()).unwrap();
            let b = f_transform(&bridge_c(), 1.0, t, &q()).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-11, epsilon = 1e-13);
        }
    }
}
