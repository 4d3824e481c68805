//! Shared integrands: the shape `C^{1/α}(t)` in plain and endpoint-local
//! coordinates, and the trend-weighted tail density
//! `C^{1/α}(t) · g(t)^β · e^{-g(t)/2}` that the convergence checks and the
//! trend integral both reduce to.
//!
//! Endpoint-local coordinates substitute `t = e^{-x}` (lower side) or
//! `t = 1 − e^{-x}` (upper side), which turns power singularities of `C`
//! into plain exponentials of `x` and lets the improper-integral driver
//! walk arbitrarily deep.  When the power toward the singular side is
//! exactly 1 — the critical case for all catalog processes — the `x`-scale
//! density tends to the constant `κ` and a second substitution `x = e^y`
//! (handled through [`crate::num::ScaledTail::density_y`]) resolves the
//! remaining slowly-varying behaviour.

use crate::error::{Error, Result};
use crate::model::trend::TrendFunction;
use crate::model::variance::{pow_neg, LocalVariance, PowShape};
use crate::model::Side;
use crate::num::ScaledTail;

/// Evaluator for `C^{1/α}`.
#[derive(Clone, Debug)]
pub(crate) enum CShapeEval {
    /// `κ · t^{-p0} (1−t)^{-p1}` — exact power form, stable at any depth.
    Pow(PowShape),
    /// Pointwise `C(t)^{1/α}` for a custom profile.
    Custom { c: LocalVariance, inv_alpha: f64 },
}

impl CShapeEval {
    pub fn new(c: &LocalVariance, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("kernel index must lie in (0, 2], got {alpha}")));
        }
        Ok(match c.inv_alpha_shape(alpha) {
            Some(shape) => CShapeEval::Pow(shape),
            None => CShapeEval::Custom { c: c.clone(), inv_alpha: alpha.recip() },
        })
    }

    /// `C^{1/α}(t)` for `t` strictly inside `(0, 1)`.
    pub fn at_t(&self, t: f64) -> f64 {
        match self {
            CShapeEval::Pow(shape) => shape.eval(t),
            CShapeEval::Custom { c, inv_alpha } => c.eval(t).powf(*inv_alpha),
        }
    }

    /// `C^{1/α}(t(x)) · |dt/dx|` at `t = e^{-x}` (side `Lo`) or
    /// `t = 1 − e^{-x}` (side `Hi`), for `x > 0`.
    pub fn density_near(&self, side: Side, x: f64) -> f64 {
        match self {
            CShapeEval::Pow(shape) => {
                let (p_here, p_there) = match side {
                    Side::Lo => (shape.p0, shape.p1),
                    Side::Hi => (shape.p1, shape.p0),
                };
                // κ · e^{-x(1 − p_here)} · (1 − e^{-x})^{-p_there}; the far
                // factor rounds to exactly 1 once e^{-x} underflows.
                shape.kappa * (-x * (1.0 - p_here)).exp() * pow_neg(-(-x).exp_m1(), p_there)
            }
            CShapeEval::Custom { .. } => {
                let jac = (-x).exp();
                let t = match side {
                    Side::Lo => jac,
                    Side::Hi => -(-x).exp_m1(),
                };
                if t == 0.0 {
                    return f64::NAN; // below f64 resolution; caller must stay shallower
                }
                self.at_t(t) * jac
            }
        }
    }

    /// Power of the singularity toward `side` (`None` for custom profiles).
    pub fn p_toward(&self, side: Side) -> Option<f64> {
        match self {
            CShapeEval::Pow(shape) => Some(match side {
                Side::Lo => shape.p0,
                Side::Hi => shape.p1,
            }),
            CShapeEval::Custom { .. } => None,
        }
    }

    /// Leading constant `κ` of the power form.
    pub fn kappa(&self) -> Option<f64> {
        match self {
            CShapeEval::Pow(shape) => Some(shape.kappa),
            CShapeEval::Custom { .. } => None,
        }
    }
}

/// `g^β e^{-g/2}` with the convention `0^0 = 1` (so `β = 0` is exactly the
/// plain exponential weight) and value 0 where `g ≤ 0` and `β ≠ 0`.
pub(crate) fn trend_weight(g: f64, gpow: f64) -> f64 {
    if gpow == 0.0 {
        (-0.5 * g).exp()
    } else if g > 0.0 {
        g.powf(gpow) * (-0.5 * g).exp()
    } else {
        0.0
    }
}

/// Tail density `C^{1/α}(t) · g(t)^β · e^{-g(t)/2}` toward one endpoint, in
/// endpoint-local coordinates.  With `β = 0` this is the trend-integral
/// integrand; with `β = k/2 − 1 + 1/α + η` it is the integrand of the
/// convergence condition on the trend.
pub(crate) struct TrendWeightedTail<'a> {
    pub shape: &'a CShapeEval,
    pub trend: &'a TrendFunction,
    pub gpow: f64,
    pub side: Side,
}

impl ScaledTail for TrendWeightedTail<'_> {
    fn density_x(&self, x: f64) -> f64 {
        let base = self.shape.density_near(self.side, x);
        if base == 0.0 {
            return 0.0;
        }
        base * trend_weight(self.trend.eval_near(self.side, x), self.gpow)
    }

    fn density_y(&self, y: f64) -> f64 {
        debug_assert!(y >= 4.0, "deep scale entered too early (y = {y})");
        match (self.shape.kappa(), self.trend.ln_weight_deep(self.side, y, self.gpow)) {
            (Some(kappa), Some(lw)) => kappa * lw.exp(),
            _ => f64::NAN, // depth() forbids reaching here
        }
    }

    fn depth(&self) -> u8 {
        // The deep scale assumes the x-density is exactly κ · weight(g):
        // that needs the singular power to be *exactly* 1 (no residual
        // e^{-x(1-p)} factor, which at x ≈ e^y would dwarf everything) and
        // a trend with a log-space deep form.
        if self.shape.p_toward(self.side) == Some(1.0) && self.trend.supports_deep() {
            2
        } else {
            1
        }
    }
}
