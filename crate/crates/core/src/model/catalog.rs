//! Catalog processes and their exact correlation functions.
//!
//! Every correlation here is for the *variance-normalized* process, so
//! `r(t, t) = 1` identically.  Alongside plain `r(s, t)` each kind exposes a
//! cancellation-free `1 − r(s, t)`: the pairwise regularity checks compare
//! `1 − r` against `K²(|f(t) − f(s)|)` deep into the singular ends, where
//! both quantities are far below `f64` epsilon relative to 1.

use super::{ChiSquareModel, Component, CorrKind, Interval, Side};
use crate::error::{Error, Result};
use crate::model::kernel::RegVarKernel;
use crate::model::variance::LocalVariance;

/// `ln(1 − e^{-x})` for `x > 0`.
fn ln_one_minus_exp_neg(x: f64) -> f64 {
    (-(-x).exp()).ln_1p()
}

fn check_unit_interval(s: f64, t: f64, what: &str, open_lo: bool, open_hi: bool) -> Result<()> {
    let lo_ok = |v: f64| if open_lo { v > 0.0 } else { v >= 0.0 };
    let hi_ok = |v: f64| if open_hi { v < 1.0 } else { v <= 1.0 };
    if lo_ok(s) && hi_ok(s) && lo_ok(t) && hi_ok(t) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} correlation needs arguments in the process domain, got ({s}, {t})")))
    }
}

pub(super) fn correlation(kind: &CorrKind, s: f64, t: f64) -> Result<f64> {
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::invalid("correlation arguments must be finite"));
    }
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    match kind {
        CorrKind::BridgeNorm => {
            check_unit_interval(s, t, "bridge", true, true)?;
            Ok((s * (1.0 - t) / (t * (1.0 - s))).sqrt())
        }
        CorrKind::BmNorm => {
            check_unit_interval(s, t, "Brownian", true, false)?;
            Ok((s / t).sqrt())
        }
        CorrKind::FbmNorm { h } => {
            check_unit_interval(s, t, "fBm", true, false)?;
            let (a, b) = (2.0 * h, *h);
            Ok((s.powf(a) + t.powf(a) - (t - s).powf(a)) / (2.0 * s.powf(b) * t.powf(b)))
        }
        CorrKind::OuStat { lambda } => Ok((-lambda * (t - s)).exp()),
        CorrKind::StationaryCorr(r) => {
            let v = r(t - s);
            if v.is_finite() && (-1.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(Error::invalid(format!("custom correlation returned {v} at lag {}", t - s)))
            }
        }
        CorrKind::PairCorr(r) => {
            let v = r(s, t);
            if v.is_finite() && (-1.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(Error::invalid(format!("custom correlation returned {v} at ({s}, {t})")))
            }
        }
        CorrKind::Unavailable => Err(Error::not_applicable("component has no exact correlation")),
    }
}

pub(super) fn one_minus_correlation(kind: &CorrKind, s: f64, t: f64) -> Result<f64> {
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::invalid("correlation arguments must be finite"));
    }
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    match kind {
        CorrKind::BridgeNorm => {
            check_unit_interval(s, t, "bridge", true, true)?;
            // ln r = ½[ln s − ln t + ln(1−t) − ln(1−s)] ≤ 0; 1 − r = −expm1(ln r).
            let ln_r = 0.5 * ((s / t).ln() + (1.0 - t).ln() - (1.0 - s).ln());
            Ok(-ln_r.exp_m1())
        }
        CorrKind::BmNorm => {
            check_unit_interval(s, t, "Brownian", true, false)?;
            Ok(-(0.5 * (s / t).ln()).exp_m1())
        }
        CorrKind::FbmNorm { h } => {
            check_unit_interval(s, t, "fBm", true, false)?;
            // 1 − r = [(t−s)^{2h} − (t^h − s^h)²] / (2 s^h t^h), with
            // t^h − s^h = −t^h expm1(h ln(s/t)) evaluated without cancellation.
            let diff_pow = (t - s).powf(2.0 * h);
            let th = t.powf(*h);
            let gap = -th * (h * (s / t).ln()).exp_m1();
            Ok((diff_pow - gap * gap) / (2.0 * s.powf(*h) * th))
        }
        CorrKind::OuStat { lambda } => Ok(-(-lambda * (t - s)).exp_m1()),
        CorrKind::StationaryCorr(_) | CorrKind::PairCorr(_) => Ok(1.0 - correlation(kind, s, t)?),
        CorrKind::Unavailable => Err(Error::not_applicable("component has no exact correlation")),
    }
}

/// `1 − r` between `t_i = e^{-x_i}` (side `Lo`) or `t_i = 1 − e^{-x_i}`
/// (side `Hi`), for `x_i > 0`.  Works even where `e^{-x}` underflows.
pub(super) fn one_minus_correlation_near(kind: &CorrKind, side: Side, x1: f64, x2: f64) -> Result<f64> {
    if !(x1 > 0.0 && x2 > 0.0 && x1.is_finite() && x2.is_finite()) {
        return Err(Error::invalid(format!("log-scale coordinates must be positive and finite, got ({x1}, {x2})")));
    }
    // Order so that xs ≥ xt: on side Lo that makes s = e^{-xs} ≤ t = e^{-xt};
    // on side Hi it makes s' = 1 − e^{-xs} ≥ t' = 1 − e^{-xt}.
    let (xt, xs) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    let delta = xs - xt;
    match (kind, side) {
        // The normalized bridge is symmetric under t ↦ 1 − t, so both sides
        // share one formula: ln r = ½[−Δx + ln(1−e^{-xt}) − ln(1−e^{-xs})].
        (CorrKind::BridgeNorm, _) => {
            let ln_r = 0.5 * (-delta + ln_one_minus_exp_neg(xt) - ln_one_minus_exp_neg(xs));
            Ok(-ln_r.exp_m1())
        }
        (CorrKind::BmNorm, Side::Lo) => Ok(-(-0.5 * delta).exp_m1()),
        (CorrKind::BmNorm, Side::Hi) => {
            // s'/t' = (1−e^{-xt})/(1−e^{-xs}) ≤ 1 with s' the *smaller* value.
            let ln_ratio = ln_one_minus_exp_neg(xt) - ln_one_minus_exp_neg(xs);
            Ok(-(0.5 * ln_ratio).exp_m1())
        }
        (CorrKind::FbmNorm { h }, Side::Lo) => {
            // Factor t^{2h} out of 1 − r with t = e^{-xt} the larger point:
            // 1 − r = [w^{2h} − m²]·e^{hΔ}/2, w = 1−e^{-Δ}, m = 1−e^{-hΔ}.
            let w = -(-delta).exp_m1();
            let m = -(-h * delta).exp_m1();
            let scale = (h * delta).exp();
            if !scale.is_finite() {
                return Ok(1.0); // points decorrelate completely across such a gap
            }
            Ok((w.powf(2.0 * h) - m * m) * scale / 2.0)
        }
        (CorrKind::FbmNorm { h }, Side::Hi) => {
            let tt = -(-xs).exp_m1(); // larger point, near 1
            let ss = -(-xt).exp_m1();
            let diff = (-xt).exp() - (-xs).exp();
            let th = tt.powf(*h);
            let gap = -th * (h * (ln_one_minus_exp_neg(xt) - ln_one_minus_exp_neg(xs))).exp_m1();
            Ok((diff.powf(2.0 * h) - gap * gap) / (2.0 * ss.powf(*h) * th))
        }
        (CorrKind::OuStat { lambda }, Side::Lo) | (CorrKind::OuStat { lambda }, Side::Hi) => {
            // |t − s| = e^{-xt}(1 − e^{-Δ}) on either side.
            let lag = (-xt).exp() * (-(-delta).exp_m1());
            Ok(-(-lambda * lag).exp_m1())
        }
        (CorrKind::StationaryCorr(_), _) | (CorrKind::PairCorr(_), _) => {
            let to_t = |x: f64| match side {
                Side::Lo => (-x).exp(),
                Side::Hi => -(-x).exp_m1(),
            };
            let (a, b) = (to_t(xs), to_t(xt));
            if a == b || (side == Side::Lo && a == 0.0) {
                return Err(Error::not_applicable(
                    "points too deep in the tail for a custom correlation in linear time",
                ));
            }
            one_minus_correlation(kind, a, b)
        }
        (CorrKind::Unavailable, _) => Err(Error::not_applicable("component has no exact correlation")),
    }
}

/// Reject intervals that attain points outside a component's domain.
pub(super) fn check_domain(kind: &CorrKind, iv: &Interval, label: &str) -> Result<()> {
    let needs_open = |side: Side, endpoint: f64| -> bool {
        iv.endpoint(side) == endpoint && !iv.is_open(side)
    };
    match kind {
        CorrKind::BridgeNorm => {
            if needs_open(Side::Lo, 0.0) || needs_open(Side::Hi, 1.0) {
                return Err(Error::invalid(format!(
                    "component `{label}` is undefined at t = 0 and t = 1; use an open endpoint"
                )));
            }
        }
        CorrKind::BmNorm | CorrKind::FbmNorm { .. } => {
            if needs_open(Side::Lo, 0.0) {
                return Err(Error::invalid(format!(
                    "component `{label}` is undefined at t = 0; use an open endpoint"
                )));
            }
        }
        _ => {}
    }
    Ok(())
}

pub(super) fn bridge_component() -> Component {
    Component::new(
        "bridge-normalized",
        RegVarKernel::pure_power(1.0).expect("valid index"),
        LocalVariance::power_shape(0.5, 1.0, 1.0).expect("valid shape"),
        CorrKind::BridgeNorm,
    )
}

pub(super) fn bm_component() -> Component {
    Component::new(
        "bm-normalized",
        RegVarKernel::pure_power(1.0).expect("valid index"),
        LocalVariance::power_shape(0.5, 1.0, 0.0).expect("valid shape"),
        CorrKind::BmNorm,
    )
}

fn fbm_component(h: f64) -> Result<Component> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::invalid(format!("Hurst index must lie in (0, 1), got {h}")));
    }
    Ok(Component::new(
        format!("fbm-normalized(h={h})"),
        RegVarKernel::pure_power(2.0 * h)?,
        LocalVariance::power_shape(0.5, 2.0 * h, 0.0)?,
        CorrKind::FbmNorm { h },
    ))
}

pub(super) fn bridge() -> ChiSquareModel {
    ChiSquareModel::new(
        vec![bridge_component()],
        vec![1.0],
        Interval::open(0.0, 1.0).expect("valid interval"),
    )
    .expect("catalog model is valid")
}

pub(super) fn bessel(n: usize) -> Result<ChiSquareModel> {
    if n == 0 {
        return Err(Error::invalid("need at least one component"));
    }
    ChiSquareModel::new(
        vec![bm_component(); n],
        vec![1.0; n],
        Interval::left_open(0.0, 1.0)?,
    )
}

pub(super) fn fbm(h: f64, n: usize) -> Result<ChiSquareModel> {
    if n == 0 {
        return Err(Error::invalid("need at least one component"));
    }
    ChiSquareModel::new(
        vec![fbm_component(h)?; n],
        vec![1.0; n],
        Interval::left_open(0.0, 1.0)?,
    )
}

pub(super) fn ou(lambda: f64, n: usize) -> Result<ChiSquareModel> {
    if n == 0 {
        return Err(Error::invalid("need at least one component"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("rate must be positive, got {lambda}")));
    }
    let c = Component::new(
        format!("ou(lambda={lambda})"),
        RegVarKernel::pure_power_scaled(1.0, lambda)?,
        LocalVariance::constant(1.0)?,
        CorrKind::OuStat { lambda },
    );
    ChiSquareModel::new(vec![c; n], vec![1.0; n], Interval::closed(0.0, 1.0)?)
}

pub(super) fn triple_sum(h: f64) -> Result<ChiSquareModel> {
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::invalid(format!(
            "the mixed three-component sum needs a Hurst index in (1/2, 1), got {h}"
        )));
    }
    // The fBm component's near-diagonal structure |Δ|^{2h}/(2 t^{2h}) is
    // split so its kernel carries the constant 2^{2h−1}: with the scaled
    // pure-power form (λ·|Δ|)^{2h}, λ^{2h} = 2^{2h−1} ⇔ λ = 2^{1 − 1/(2h)}.
    let lambda = 2f64.powf(1.0 - 1.0 / (2.0 * h));
    let smooth = Component::new(
        format!("fbm-normalized(h={h})"),
        RegVarKernel::pure_power_scaled(2.0 * h, lambda)?,
        LocalVariance::power_shape(2f64.powf(-2.0 * h), 2.0 * h, 0.0)?,
        CorrKind::FbmNorm { h },
    );
    ChiSquareModel::new(
        vec![bridge_component(), bm_component(), smooth],
        vec![1.0; 3],
        Interval::open(0.0, 1.0)?,
    )
}
