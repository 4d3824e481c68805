//! Trend (drift) functions `g` subtracted from the squared process.
//!
//! Tail asymptotics weight time by `e^{-g(t)/2}`, so what matters about a
//! trend is its growth at the singular endpoints — and the growth rates that
//! arise are *iterated-logarithmic* (`ln ln(1/t)` and slower).  To let the
//! quadrature layer follow that growth to depths where `t` itself is not
//! representable, each analytic family evaluates in three coordinates:
//!
//! * plain `t ∈ (0, 1)`;
//! * `x = -ln t` (or `-ln(1−t)` at the right endpoint), good to `x ≈ 10³⁰⁰`;
//! * `y = ln x`, i.e. `t = e^{-e^y}`, good for arbitrarily large `y`.
//!
//! The combined factor `e^{-g/2}·x` that appears in deep-scale integrands is
//! exposed in log form ([`TrendFunction::ln_weight_deep`]) because neither
//! factor alone is representable there.

use crate::error::{Error, Result};
use crate::model::Side;
use std::fmt;
use std::sync::Arc;

const LN4: f64 = 1.386_294_361_119_890_6;

/// `ln(1 + c²)` without overflow for large `c`.
#[inline]
fn ln1p_sq(c: f64) -> f64 {
    if c.abs() < 1e8 {
        (c * c).ln_1p()
    } else {
        2.0 * c.abs().ln()
    }
}

/// The centering function `c(t) = ln(1 − ln(4t(1−t)))` in the three scales.
#[inline]
fn c_plain(t: f64) -> f64 {
    (1.0 - (4.0 * t * (1.0 - t)).ln()).ln()
}

/// `ln(1 − e^{-x})` for `x > 0`.
#[inline]
fn ln_one_minus_exp_neg(x: f64) -> f64 {
    (-(-x).exp()).ln_1p()
}

#[inline]
fn c_near(x: f64) -> f64 {
    // ln(4t(1−t)) = ln4 − x + ln(1−e^{-x}) at t = e^{-x} (and identically at
    // t = 1−e^{-x} by symmetry), so the argument of the outer log is
    // 1 − ln(4t(1−t)) = (1 − ln4) + x − ln(1−e^{-x}) > 0 for all x > 0.
    ((1.0 - LN4) + x - ln_one_minus_exp_neg(x)).ln()
}

#[inline]
fn c_deep(y: f64) -> f64 {
    if y > 690.0 {
        // x = e^y overflows; c = ln(x + (1−ln4)) = y + ln(1 + (1−ln4)e^{-y}).
        y + ((1.0 - LN4) * (-y).exp()).ln_1p()
    } else {
        (y.exp() + (1.0 - LN4)).ln()
    }
}

/// Functional form of a trend.
#[derive(Clone)]
pub enum TrendForm {
    /// `g ≡ 0`.
    Zero,
    /// `g ≡ v`.
    Const(f64),
    /// `g(t) = scale·[c(t) + ν·ln(1 + c(t)²)]` with
    /// `c(t) = ln(1 − ln(4t(1−t)))`; symmetric about `t = 1/2`, zero there,
    /// growing like `scale·ln ln(1/t)` at both ends.
    GNu { nu: f64, scale: f64 },
    /// `g(t) = a·ln ln(e²/t) + b·ln ln ln(e³/t)`; grows at the left endpoint
    /// only, finite at `t = 1`.
    LogLog { a: f64, b: f64 },
    /// Arbitrary callable on `(0, 1)`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for TrendForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrendForm::Zero => write!(f, "Zero"),
            TrendForm::Const(v) => write!(f, "Const({v})"),
            TrendForm::GNu { nu, scale } => write!(f, "GNu {{ nu: {nu}, scale: {scale} }}"),
            TrendForm::LogLog { a, b } => write!(f, "LogLog {{ a: {a}, b: {b} }}"),
            TrendForm::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A trend function on `(0, 1)`.
#[derive(Clone, Debug)]
pub struct TrendFunction {
    form: TrendForm,
}

impl TrendFunction {
    pub fn zero() -> Self {
        TrendFunction { form: TrendForm::Zero }
    }

    pub fn constant(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::invalid("constant trend must be finite"));
        }
        Ok(TrendFunction { form: TrendForm::Const(v) })
    }

    /// The iterated-log family `c + ν·ln(1+c²)`.
    pub fn g_nu(nu: f64) -> Result<Self> {
        Self::g_nu_scaled(nu, 1.0)
    }

    /// `scale` multiples of the `g_ν` family.  The supremum statistic for
    /// the normalized empirical bridge uses `scale = 2`.
    pub fn g_nu_scaled(nu: f64, scale: f64) -> Result<Self> {
        if !nu.is_finite() || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("g_nu trend needs finite nu and positive finite scale"));
        }
        Ok(TrendFunction { form: TrendForm::GNu { nu, scale } })
    }

    /// `a·lnln(e²/t) + b·lnlnln(e³/t)`.
    pub fn loglog(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::invalid("loglog trend needs finite coefficients"));
        }
        Ok(TrendFunction { form: TrendForm::LogLog { a, b } })
    }

    pub fn custom(g: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Self {
        TrendFunction { form: TrendForm::Custom(g) }
    }

    pub fn form(&self) -> &TrendForm {
        &self.form
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.form, TrendForm::Zero)
    }

    /// `g(t)`, `t ∈ (0, 1)`.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.form {
            TrendForm::Zero => 0.0,
            TrendForm::Const(v) => *v,
            TrendForm::GNu { nu, scale } => {
                let c = c_plain(t);
                scale * (c + nu * ln1p_sq(c))
            }
            TrendForm::LogLog { a, b } => {
                let l = -t.ln();
                a * (2.0 + l).ln() + b * (3.0 + l).ln().ln()
            }
            TrendForm::Custom(g) => g(t),
        }
    }

    /// `g` at `t = e^{-x}` (side `Lo`) or `t = 1 − e^{-x}` (side `Hi`),
    /// stable for all `x > 0` up to the representable range.
    pub fn eval_near(&self, side: Side, x: f64) -> f64 {
        match &self.form {
            TrendForm::Zero => 0.0,
            TrendForm::Const(v) => *v,
            TrendForm::GNu { nu, scale } => {
                // Symmetric: identical at both sides.
                let c = c_near(x);
                scale * (c + nu * ln1p_sq(c))
            }
            TrendForm::LogLog { a, b } => match side {
                Side::Lo => a * (2.0 + x).ln() + b * (3.0 + x).ln().ln(),
                Side::Hi => {
                    let l = -ln_one_minus_exp_neg(x); // −ln t at t = 1−e^{-x}
                    a * (2.0 + l).ln() + b * (3.0 + l).ln().ln()
                }
            },
            TrendForm::Custom(g) => {
                let t = match side {
                    Side::Lo => (-x).exp(),
                    Side::Hi => -(-x).exp_m1(),
                };
                g(t)
            }
        }
    }

    /// Whether the deep scale (`x = e^y`) is evaluable analytically.
    pub fn supports_deep(&self) -> bool {
        !matches!(self.form, TrendForm::Custom(_))
    }

    /// `g` at `x = e^y`; requires [`supports_deep`](Self::supports_deep) and
    /// is intended for `y ≳ 8` (the improper driver only descends there).
    pub fn eval_near_deep(&self, side: Side, y: f64) -> f64 {
        match &self.form {
            TrendForm::Zero => 0.0,
            TrendForm::Const(v) => *v,
            TrendForm::GNu { nu, scale } => {
                let c = c_deep(y);
                scale * (c + nu * ln1p_sq(c))
            }
            TrendForm::LogLog { a, b } => match side {
                Side::Lo => {
                    let l1 = y + (2.0 * (-y).exp()).ln_1p();
                    let l2 = (y + (3.0 * (-y).exp()).ln_1p()).ln();
                    a * l1 + b * l2
                }
                // Finite limit at t = 1.
                Side::Hi => a * std::f64::consts::LN_2 + b * 3f64.ln().ln(),
            },
            TrendForm::Custom(_) => f64::NAN,
        }
    }

    /// `ln( g₊^{gpow} · e^{-g/2} · x )` at `x = e^y` — the full deep-scale
    /// weight including the Jacobian `x`, which is what improper integrands
    /// need (neither factor alone is representable).  `None` for trends
    /// without deep support.  `g ≤ 0` with `gpow > 0` yields `-∞` (zero
    /// weight), consistent with clamping `g₊`.
    ///
    /// The trends here grow like `λ·y + O(ln y)` at the deep scale, so the
    /// combination `y − g/2` must cancel the linear part *analytically*:
    /// computed literally at `y ≈ 10⁸` the subtraction would round away the
    /// `O(ln y)` remainder that decides convergence.
    pub fn ln_weight_deep(&self, side: Side, y: f64, gpow: f64) -> Option<f64> {
        // `(lin, rest)` with `y − g/2 = lin·y + rest` exactly.
        let (lin, rest) = match &self.form {
            TrendForm::Zero => (1.0, 0.0),
            TrendForm::Const(v) => (1.0, -0.5 * v),
            TrendForm::GNu { nu, scale } => {
                // c = y + ln(1 + (1−ln4)e^{-y}), g = scale·(c + ν·ln(1+c²)).
                let corr = ((1.0 - LN4) * (-y).exp()).ln_1p();
                let c = y + corr;
                (1.0 - 0.5 * scale, -0.5 * scale * (corr + nu * ln1p_sq(c)))
            }
            TrendForm::LogLog { a, b } => match side {
                Side::Lo => {
                    // g = a·(y + ln(1 + 2e^{-y})) + b·ln(y + ln(1 + 3e^{-y})).
                    let corr = (2.0 * (-y).exp()).ln_1p();
                    let l2 = (y + (3.0 * (-y).exp()).ln_1p()).ln();
                    (1.0 - 0.5 * a, -0.5 * (a * corr + b * l2))
                }
                Side::Hi => (1.0, -0.5 * (a * std::f64::consts::LN_2 + b * 3f64.ln().ln())),
            },
            TrendForm::Custom(_) => return None,
        };
        let pow_term = if gpow == 0.0 {
            0.0
        } else {
            let g = self.eval_near_deep(side, y);
            if g > 0.0 {
                gpow * g.ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        Some(lin * y + rest + pow_term)
    }

    /// Analytic derivative `g'(t)` where available.
    pub fn deriv(&self, t: f64) -> Option<f64> {
        match &self.form {
            TrendForm::Zero | TrendForm::Const(_) => Some(0.0),
            TrendForm::GNu { nu, scale } => {
                let arg = 1.0 - (4.0 * t * (1.0 - t)).ln(); // e^{c}
                let c = arg.ln();
                let cp = (2.0 * t - 1.0) / (t * (1.0 - t) * arg);
                Some(scale * (1.0 + 2.0 * nu * c / (1.0 + c * c)) * cp)
            }
            TrendForm::LogLog { a, b } => {
                let l = -t.ln();
                let d1 = -a / (t * (2.0 + l));
                let inner = (3.0 + l).ln();
                let d2 = -b / (t * (3.0 + l) * inner);
                Some(d1 + d2)
            }
            TrendForm::Custom(_) => None,
        }
    }
}
