//! Local variance profiles `C(t)` on `(0, 1)`.
//!
//! `C` measures how fast correlations degenerate locally in time:
//! `1 − r(s,t) ≈ C(t)·K²(|t−s|)`.  For every catalog process `C` is a
//! two-sided power shape `a·t^{-q0}·(1−t)^{-q1}`, which the quadrature layer
//! exploits for exact endpoint-stable evaluation; arbitrary callables are
//! accepted with reduced (but honest) deep-endpoint support.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// `x^{-p}` with exact fast paths shared by every caller, so that two
/// integrands built from the same shapes stay bit-for-bit proportional.
#[inline]
pub(crate) fn pow_neg(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        x.recip()
    } else {
        x.powf(-p)
    }
}

/// Closed-form power shape `κ·t^{-p0}·(1−t)^{-p1}` (used for `C^{1/α}`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowShape {
    pub kappa: f64,
    pub p0: f64,
    pub p1: f64,
}

impl PowShape {
    /// Evaluate at `t ∈ (0, 1)`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.kappa * pow_neg(t, self.p0) * pow_neg(1.0 - t, self.p1)
    }
}

/// Functional form of the local variance.
#[derive(Clone)]
pub enum VarianceForm {
    /// `C(t) = a·t^{-q0}·(1−t)^{-q1}`.
    PowerShape { a: f64, q0: f64, q1: f64 },
    /// Arbitrary positive callable on `(0, 1)`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for VarianceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarianceForm::PowerShape { a, q0, q1 } => {
                write!(f, "PowerShape {{ a: {a}, q0: {q0}, q1: {q1} }}")
            }
            VarianceForm::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Local variance profile `C`.
#[derive(Clone, Debug)]
pub struct LocalVariance {
    form: VarianceForm,
}

impl LocalVariance {
    /// `C(t) = a·t^{-q0}·(1−t)^{-q1}`.
    pub fn power_shape(a: f64, q0: f64, q1: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("variance coefficient must be positive, got {a}")));
        }
        if !(q0 >= 0.0 && q1 >= 0.0 && q0.is_finite() && q1.is_finite()) {
            return Err(Error::invalid("variance shape exponents must be finite and nonnegative"));
        }
        Ok(LocalVariance { form: VarianceForm::PowerShape { a, q0, q1 } })
    }

    /// Constant profile `C ≡ a`.
    pub fn constant(a: f64) -> Result<Self> {
        Self::power_shape(a, 0.0, 0.0)
    }

    /// Arbitrary positive callable.
    pub fn custom(c: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Self {
        LocalVariance { form: VarianceForm::Custom(c) }
    }

    /// `C(t)` for `t ∈ (0, 1)`.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.form {
            VarianceForm::PowerShape { a, q0, q1 } => {
                a * pow_neg(t, *q0) * pow_neg(1.0 - t, *q1)
            }
            VarianceForm::Custom(c) => c(t),
        }
    }

    /// Exact shape of `C^{1/α}` when analytically available.
    pub fn inv_alpha_shape(&self, alpha: f64) -> Option<PowShape> {
        match &self.form {
            VarianceForm::PowerShape { a, q0, q1 } => Some(PowShape {
                kappa: a.powf(1.0 / alpha),
                p0: q0 / alpha,
                p1: q1 / alpha,
            }),
            VarianceForm::Custom(_) => None,
        }
    }

    /// The underlying form (read-only).
    pub fn form(&self) -> &VarianceForm {
        &self.form
    }

    /// Structural equality (custom profiles compare by callable identity).
    pub fn same_structure(&self, other: &Self) -> bool {
        match (&self.form, &other.form) {
            (
                VarianceForm::PowerShape { a, q0, q1 },
                VarianceForm::PowerShape { a: b, q0: r0, q1: r1 },
            ) => a == b && q0 == r0 && q1 == r1,
            (VarianceForm::Custom(a), VarianceForm::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridge_profile_values() {
        // C(t) = 1/(2t(1−t)): a = 1/2, q0 = q1 = 1.
        let c = LocalVariance::power_shape(0.5, 1.0, 1.0).unwrap();
        assert!((c.eval(0.5) - 2.0).abs() < 1e-15);
        assert!((c.eval(0.25) - 1.0 / (2.0 * 0.25 * 0.75)).abs() < 1e-15);
    }

    #[test]
    fn inv_alpha_shape_is_exact_power() {
        let c = LocalVariance::power_shape(0.5, 1.5, 0.0).unwrap();
        let s = c.inv_alpha_shape(1.5).unwrap();
        assert!((s.p0 - 1.0).abs() < 1e-16);
        // C^{1/α}(t)·t should be the constant κ when q0 = α.
        let t = 1e-9;
        assert!((s.eval(t) * t - s.kappa).abs() < 1e-15 * s.kappa);
    }

    #[test]
    fn pow_neg_fast_paths_agree() {
        for &(x, p) in &[(0.3f64, 1.0f64), (0.3, 0.0), (0.7, 2.0)] {
            let direct = if p == 0.0 { 1.0 } else { x.powf(-p) };
            assert!((pow_neg(x, p) - direct).abs() <= 1e-16 * direct.abs());
        }
    }

    #[test]
    fn rejects_nonpositive_coefficient() {
        assert!(LocalVariance::power_shape(0.0, 1.0, 1.0).is_err());
        assert!(LocalVariance::power_shape(-1.0, 1.0, 1.0).is_err());
    }
}
