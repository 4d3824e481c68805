//! Correlation-decay kernels `K` with regularly varying behaviour at 0.
//!
//! A kernel describes how component correlations degenerate near the
//! diagonal: `1 − r(s,t) ≈ C(t)·K²(|t − s|)` with `K(h) = h^{α/2}·L(h)` for
//! some index `α ∈ (0, 2]` and slowly varying `L`.  Three forms are
//! supported: pure powers (optionally time-scaled), powers with a
//! logarithmic correction, and arbitrary callables.

use crate::error::{Error, Result};
use crate::num::invert;
use std::fmt;
use std::sync::Arc;

/// Functional form of the kernel.
#[derive(Clone)]
pub enum KernelForm {
    /// `K(h) = (scale·h)^{α/2}`.
    PurePower { scale: f64 },
    /// `K(h) = (scale·h)^{α/2}·(ln(1/h))^{beta}` on `h ∈ (0, 1)`.
    PowerLog { scale: f64, beta: f64 },
    /// User-supplied `K`, continuous and strictly increasing near 0 with
    /// `K(0+) = 0`; the regular-variation index is declared, not checked.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for KernelForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelForm::PurePower { scale } => write!(f, "PurePower {{ scale: {scale} }}"),
            KernelForm::PowerLog { scale, beta } => {
                write!(f, "PowerLog {{ scale: {scale}, beta: {beta} }}")
            }
            KernelForm::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Regularly varying kernel with index `α ∈ (0, 2]`.
#[derive(Clone, Debug)]
pub struct RegVarKernel {
    alpha: f64,
    form: KernelForm,
}

impl RegVarKernel {
    /// `K(h) = h^{α/2}`.
    pub fn pure_power(alpha: f64) -> Result<Self> {
        Self::pure_power_scaled(alpha, 1.0)
    }

    /// `K(h) = (scale·h)^{α/2}`, e.g. `K²(h) = λh` for a unit-rate family
    /// run at rate `λ` (then `scale = λ`, `α = 1`).
    pub fn pure_power_scaled(alpha: f64, scale: f64) -> Result<Self> {
        Self::validate_alpha(alpha)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("kernel scale must be positive, got {scale}")));
        }
        Ok(RegVarKernel { alpha, form: KernelForm::PurePower { scale } })
    }

    /// `K(h) = (scale·h)^{α/2}·(ln(1/h))^{beta}` on `(0, 1)`.
    pub fn power_log(alpha: f64, scale: f64, beta: f64) -> Result<Self> {
        Self::validate_alpha(alpha)?;
        if !(scale > 0.0 && scale.is_finite()) || !beta.is_finite() {
            return Err(Error::invalid("power-log kernel needs positive finite scale and finite beta"));
        }
        Ok(RegVarKernel { alpha, form: KernelForm::PowerLog { scale, beta } })
    }

    /// Custom kernel with declared index.
    pub fn custom(alpha: f64, k: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Result<Self> {
        Self::validate_alpha(alpha)?;
        Ok(RegVarKernel { alpha, form: KernelForm::Custom(k) })
    }

    fn validate_alpha(alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::invalid(format!("kernel index alpha must lie in (0, 2], got {alpha}")));
        }
        Ok(())
    }

    /// Regular-variation index `α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Whether `K` is a pure power (no slowly varying correction).
    pub fn is_pure_power(&self) -> bool {
        matches!(self.form, KernelForm::PurePower { .. })
    }

    /// Upper end of the domain on which `K` is guaranteed increasing.
    fn monotone_hi(&self) -> f64 {
        match &self.form {
            KernelForm::PurePower { .. } => f64::MAX,
            KernelForm::PowerLog { beta, .. } => {
                if *beta > 0.0 {
                    // Increasing while ln(1/h) > 2β/α.
                    0.999 * (-2.0 * beta / self.alpha).exp().min(1.0 - 1e-12)
                } else {
                    1.0 - 1e-12
                }
            }
            KernelForm::Custom(_) => 1.0 - 1e-12,
        }
    }

    /// `K(h)`.  Domain: `h ≥ 0` (and `h < 1` for power-log kernels).
    pub fn eval(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::invalid(format!("kernel argument must be a finite nonnegative number, got {h}")));
        }
        if h == 0.0 {
            return Ok(0.0);
        }
        match &self.form {
            KernelForm::PurePower { scale } => Ok((scale * h).powf(0.5 * self.alpha)),
            KernelForm::PowerLog { scale, beta } => {
                if h >= 1.0 {
                    return Err(Error::invalid(format!(
                        "power-log kernel is only defined on (0, 1), got {h}"
                    )));
                }
                Ok((scale * h).powf(0.5 * self.alpha) * (1.0 / h).ln().powf(*beta))
            }
            KernelForm::Custom(f) => {
                let v = f(h);
                if v.is_nan() {
                    return Err(Error::numeric(format!("custom kernel returned NaN at {h}")));
                }
                Ok(v)
            }
        }
    }

    /// `K²(h)` — the quantity that actually appears in correlation bounds.
    pub fn sq(&self, h: f64) -> Result<f64> {
        match &self.form {
            // Direct form avoids the √-then-square round trip.
            KernelForm::PurePower { scale } => {
                if !(h >= 0.0) || !h.is_finite() {
                    return Err(Error::invalid(format!("kernel argument must be a finite nonnegative number, got {h}")));
                }
                Ok(if h == 0.0 { 0.0 } else { (scale * h).powf(self.alpha) })
            }
            _ => Ok(self.eval(h)?.powi(2)),
        }
    }

    /// Generalized inverse: smallest `h` with `K(h) = y`, for `y` in the
    /// increasing range of `K` near 0.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(Error::invalid(format!("kernel inverse target must be finite and nonnegative, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        match &self.form {
            KernelForm::PurePower { scale } => Ok(y.powf(2.0 / self.alpha) / scale),
            _ => {
                let hi = self.monotone_hi();
                let k_hi = self.eval(hi)?;
                if y > k_hi {
                    return Err(Error::invalid(format!(
                        "kernel inverse target {y:.6e} exceeds K({hi:.6e}) = {k_hi:.6e}, the top of the monotone range"
                    )));
                }
                // Bracket from below, then bisect.
                let f = |h: f64| self.eval(h).unwrap_or(f64::NAN);
                let mut seed = hi.min(1e-4);
                while f(seed) > y {
                    seed *= 0.25;
                    if seed < 1e-300 {
                        return Err(Error::numeric("kernel inverse target below representable range"));
                    }
                }
                let (lo, hi_b) = invert::grow_bracket(f, seed, y, true, 2000)?;
                invert::bisect_increasing(f, lo, hi_b.min(hi), y, 1e-14)
            }
        }
    }

    /// The natural length scale at level `u`: `q(u) = K⁻¹(u^{-1/2})`.
    ///
    /// This is the horizon over which the squared process decorrelates at
    /// the level of interest; grids finer than a fraction of `q(u)` resolve
    /// the supremum.
    pub fn q_of_u(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::invalid(format!("level u must be positive and finite, got {u}")));
        }
        match &self.form {
            KernelForm::PurePower { scale } => Ok(u.powf(-1.0 / self.alpha) / scale),
            _ => self.inverse(u.powf(-0.5)),
        }
    }

    /// Structural equality (same parametric family with equal parameters;
    /// custom kernels compare by identity of the callable).
    pub fn same_structure(&self, other: &Self) -> bool {
        if self.alpha != other.alpha {
            return false;
        }
        match (&self.form, &other.form) {
            (KernelForm::PurePower { scale: a }, KernelForm::PurePower { scale: b }) => a == b,
            (
                KernelForm::PowerLog { scale: a, beta: ba },
                KernelForm::PowerLog { scale: b, beta: bb },
            ) => a == b && ba == bb,
            (KernelForm::Custom(a), KernelForm::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_values() {
        let k = RegVarKernel::pure_power(1.0).unwrap();
        assert_eq!(k.eval(0.25).unwrap(), 0.5);
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
        let k = RegVarKernel::pure_power(1.5).unwrap();
        assert!((k.eval(0.01).unwrap() - 0.031_622_776_601_683_79).abs() < 1e-15);
    }

    #[test]
    fn q_of_u_pure_power() {
        let k1 = RegVarKernel::pure_power(1.0).unwrap();
        assert!((k1.q_of_u(100.0).unwrap() - 0.01).abs() < 1e-16);
        let k2 = RegVarKernel::pure_power(2.0).unwrap();
        assert!((k2.q_of_u(100.0).unwrap() - 0.1).abs() < 1e-16);
        let k15 = RegVarKernel::pure_power(1.5).unwrap();
        assert!((k15.q_of_u(64.0).unwrap() - 0.0625).abs() < 1e-16);
    }

    #[test]
    fn scaled_pure_power_matches_rate() {
        // K²(h) = λh at λ = 2: q(u) = 1/(λu).
        let k = RegVarKernel::pure_power_scaled(1.0, 2.0).unwrap();
        assert!((k.sq(0.3).unwrap() - 0.6).abs() < 1e-15);
        assert!((k.q_of_u(10.0).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn power_log_inverse_round_trip() {
        let k = RegVarKernel::power_log(1.0, 1.0, 0.5).unwrap();
        for &u in &[16.0, 100.0, 1e4, 1e8] {
            let q = k.q_of_u(u).unwrap();
            let back = k.eval(q).unwrap();
            let target = u.powf(-0.5);
            assert!(
                (back - target).abs() <= 1e-10 * target,
                "u={u}: K(q)={back} vs {target}"
            );
        }
    }

    #[test]
    fn custom_kernel_round_trip() {
        let k = RegVarKernel::custom(1.0, Arc::new(|h: f64| (h / (1.0 + h)).sqrt())).unwrap();
        let q = k.inverse(0.1).unwrap();
        assert!(((q / (1.0 + q)).sqrt() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(RegVarKernel::pure_power(0.0).is_err());
        assert!(RegVarKernel::pure_power(2.5).is_err());
        assert!(RegVarKernel::pure_power(-1.0).is_err());
    }

    #[test]
    fn power_log_domain_enforced() {
        let k = RegVarKernel::power_log(1.0, 1.0, 1.0).unwrap();
        assert!(k.eval(1.5).is_err());
    }
}
