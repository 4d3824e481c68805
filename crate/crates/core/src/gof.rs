//! The goodness-of-fit statistic `L = sup_t ( n·K(Ĝ_n(t), t) − g_ν(t) )`
//! over `t ∈ (0, 1)` and its asymptotic p-value.
//!
//! `K(s, t) = s ln(s/t) + (1−s) ln((1−s)/(1−t))` is the Bernoulli
//! Kullback–Leibler divergence, `Ĝ_n` the right-continuous empirical CDF
//! of a sample already mapped to `(0, 1)`, and
//! `g_ν(t) = c(t) + ν ln(1 + c²(t))` with `c(t) = ln(1 − ln(4t(1−t)))`
//! the doubly-logarithmic trend that keeps the supremum finite.
//!
//! The supremum is computed exactly per constancy interval of `Ĝ_n`: on
//! each interval the inner function is smooth, so it is scored at both
//! one-sided endpoint limits (at a sample point both `i/n` and `(i−1)/n`
//! are used) and at interior critical points located by sign changes of
//! the analytic derivative and refined by golden-section search.  The
//! endpoint limits `t → 0, 1` are `−∞` analytically and are never chased
//! numerically.
//!
//! On the limit scale (twice the statistic), the tail of the limiting
//! supremum is `P{L > u} ≈ √u e^{−u/2} (2π)^{−1/2} ∫₀¹ e^{−g_ν} / (t(1−t)) dt`,
//! valid for `ν > 3/4`; at `ν ≤ 3/4` the limit is almost surely infinite
//! and no p-value exists.

use crate::asymptotics::{trend_weighted_integral, ApproxOptions};
use crate::error::{Error, Result};
use crate::model::{ChiSquareModel, TrendFunction};
use crate::num::Finiteness;
use serde::Serialize;

/// Bernoulli Kullback–Leibler divergence `K(s, t)` with the conventions
/// `0·ln 0 = 0` (so `K(0, t) = −ln(1−t)` and `K(1, t) = −ln t`).
///
/// `s ∈ [0, 1]`, `t ∈ (0, 1)` strictly.
pub fn divergence_k(s: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("first argument must lie in [0, 1], got {s}")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!(
            "second argument must lie strictly inside (0, 1), got {t}"
        )));
    }
    Ok(k_raw(s, t))
}

/// `K(s, t)` without validation (hot path; caller guarantees domains).
fn k_raw(s: f64, t: f64) -> f64 {
    let left = if s == 0.0 { 0.0 } else { s * (s / t).ln() };
    let right = if s == 1.0 { 0.0 } else { (1.0 - s) * ((1.0 - s) / (1.0 - t)).ln() };
    left + right
}

/// `c(t) = ln(1 − ln(4t(1−t)))` and the inner value `m = 1 − ln(4t(1−t))`.
fn c_of(t: f64) -> (f64, f64) {
    let m = 1.0 - (4.0 * t * (1.0 - t)).ln();
    (m.ln(), m)
}

/// The trend `g_ν(t) = c(t) + ν ln(1 + c²(t))`, symmetric about `1/2` and
/// vanishing there.
pub fn trend_g_nu(nu: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!("the trend is defined on (0, 1), got t = {t}")));
    }
    if !nu.is_finite() {
        return Err(Error::invalid(format!("trend index must be finite, got {nu}")));
    }
    Ok(g_nu_raw(nu, t))
}

fn g_nu_raw(nu: f64, t: f64) -> f64 {
    let (c, _) = c_of(t);
    c + nu * (1.0 + c * c).ln()
}

/// `φ(t) = n·K(s, t) − g_ν(t)` — the inner function of the supremum on a
/// constancy interval where `Ĝ_n ≡ s`.
fn phi(n: f64, s: f64, t: f64, nu: f64) -> f64 {
    n * k_raw(s, t) - g_nu_raw(nu, t)
}

/// Sign carrier of `dφ/dt`: `φ'(t) = ψ(t) / (t(1−t))` with
/// `ψ(t) = n(t−s) + (1−2t)·w/m`, `w = 1 + 2νc/(1+c²)`.
fn psi(n: f64, s: f64, t: f64, nu: f64) -> f64 {
    let (c, m) = c_of(t);
    let w = 1.0 + 2.0 * nu * c / (1.0 + c * c);
    n * (t - s) + (1.0 - 2.0 * t) * w / m
}

/// Golden-section maximization of a smooth unimodal-on-bracket function.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..90 {
        if hi - lo <= 1e-13 * hi.abs().max(1e-3) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.max(f2)
}

/// A sample already mapped to `(0, 1)` (after the caller's
/// probability-integral transform), with its sorted copy cached.
#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Sample {
    /// Validates that every value lies strictly inside `(0, 1)`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a sample needs at least one value"));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::invalid(format!(
                "sample values must lie strictly inside (0, 1), got {v}"
            )));
        }
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
        Ok(Sample { values, sorted })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Interior scan points per constancy interval (derivative sign changes
/// between consecutive points are refined by golden section).
const SCAN: usize = 33;

/// The statistic `L = sup_{t ∈ (0,1)} ( n·K(Ĝ_n(t), t) − g_ν(t) )`.
///
/// The supremum is exact up to golden-section tolerance: every constancy
/// interval of the empirical CDF contributes its two one-sided endpoint
/// limits and all interior critical points.
pub fn compute_l(sample: &Sample, nu: f64) -> Result<f64> {
    if !nu.is_finite() {
        return Err(Error::invalid(format!("trend index must be finite, got {nu}")));
    }
    let n = sample.n();
    let nf = n as f64;
    let ts = sample.sorted();
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let s = i as f64 / nf;
        let a = if i == 0 { 0.0 } else { ts[i - 1] };
        let b = if i == n { 1.0 } else { ts[i] };
        // One-sided limits: at a sample point the right limit uses s = i/n
        // (this interval's left end) and the left limit s = (i−1)/n (the
        // previous interval's right end).  t → 0, 1 are −∞ analytically.
        if a > 0.0 {
            best = best.max(phi(nf, s, a, nu));
        }
        if b < 1.0 {
            best = best.max(phi(nf, s, b, nu));
        }
        if !(b - a > 1e-12) {
            continue;
        }
        // Interior critical points: scan the analytic derivative sign and
        // refine each +→− bracket.  The scan includes the interval ends
        // (inset by a sliver where the end is the singular 0 or 1, where ψ
        // is indeterminate) so a crossing in the first or last cell is
        // still bracketed.
        let step = (b - a) / (SCAN + 1) as f64;
        let inset = step * 1e-6;
        let mut prev_t = f64::NAN;
        let mut prev_psi = f64::NAN;
        for j in 0..=SCAN + 1 {
            let t = if j == 0 {
                if a > 0.0 { a } else { a + inset }
            } else if j == SCAN + 1 {
                if b < 1.0 { b } else { b - inset }
            } else {
                a + step * j as f64
            };
            let p = psi(nf, s, t, nu);
            if j > 0 && j <= SCAN {
                best = best.max(phi(nf, s, t, nu));
            }
            if prev_psi > 0.0 && p <= 0.0 {
                best = best.max(golden_max(|x| phi(nf, s, x, nu), prev_t, t));
            }
            prev_t = t;
            prev_psi = p;
        }
    }
    Ok(best)
}

/// Asymptotic p-value for an observed value of the limiting statistic.
#[derive(Clone, Debug, Serialize)]
pub struct GofPValue {
    /// Observed value on the limit scale (twice the finite-sample
    /// statistic: `2·L_n` converges in distribution to the limit).
    pub u: f64,
    pub nu: f64,
    /// `min(1, √u e^{−u/2} (2π)^{−1/2} · integral)`.
    pub p_value: f64,
    /// Whether the raw asymptotic expression exceeded 1 and was capped.
    pub capped: bool,
    /// `∫₀¹ e^{−g_ν(t)} / (t(1−t)) dt`.
    pub integral: f64,
    pub integral_abs_err: f64,
    /// Always "asymptotic": the value approximates the limiting tail, it
    /// is not an exact finite-sample probability.
    pub method: String,
}

/// Asymptotic tail probability `P{L > u}` of the limiting statistic,
/// evaluated at `u = l_obs` and capped at 1.
///
/// Requires `ν > 3/4`: below that threshold the limiting supremum is
/// almost surely infinite and no p-value exists.  Callers with a
/// finite-sample statistic `L_n` should pass `2·L_n` (the limit of the
/// doubled statistic).
pub fn p_value(l_obs: f64, nu: f64, opts: &ApproxOptions) -> Result<GofPValue> {
    if !l_obs.is_finite() {
        return Err(Error::invalid(format!("observed statistic must be finite, got {l_obs}")));
    }
    if !(nu > 0.75) {
        return Err(Error::not_applicable(format!(
            "for ν ≤ 3/4 the limiting statistic is almost surely infinite, so no asymptotic \
             p-value exists (got ν = {nu})"
        )));
    }
    // The weight integral is the bridge change of time damped by e^{−g_ν}:
    // C^{1/α}(t) = 1/(2t(1−t)) for the normalized bridge, so the corollary
    // integral is twice the trend-weighted length with doubled trend.
    let bridge = ChiSquareModel::bridge();
    let trend = TrendFunction::g_nu_scaled(nu, 2.0)?;
    let length = trend_weighted_integral(
        bridge.component(0).variance(),
        bridge.alpha(),
        &trend,
        0.0,
        &bridge.interval(),
        &opts.quad,
        &opts.tail,
    )?;
    if length.verdict != Finiteness::Finite {
        return Err(Error::numeric(format!(
            "the p-value weight integral did not resolve as finite at ν = {nu}"
        )));
    }
    let integral = 2.0 * length.value;
    let integral_abs_err = 2.0 * length.abs_err;
    let raw = if l_obs > 0.0 {
        l_obs.sqrt() * (-0.5 * l_obs).exp() / (2.0 * std::f64::consts::PI).sqrt() * integral
    } else {
        f64::INFINITY // the asymptotic only shrinks below 1 for large u
    };
    let capped = !(raw < 1.0);
    Ok(GofPValue {
        u: l_obs,
        nu,
        p_value: if capped { 1.0 } else { raw },
        capped,
        integral,
        integral_abs_err,
        method: "asymptotic".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::tail_approx;
    use crate::num::adaptive;
    use crate::num::QuadOptions;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: dense grid over (0, 1) plus both one-sided
    /// limits at every sample point.
    fn brute_force_l(sample: &Sample, nu: f64, grid: usize) -> f64 {
        let n = sample.n();
        let nf = n as f64;
        let ts = sample.sorted();
        let mut best = f64::NEG_INFINITY;
        for j in 1..grid {
            let t = j as f64 / grid as f64;
            // Right-continuous ECDF value at t.
            let s = ts.partition_point(|&x| x <= t) as f64 / nf;
            best = best.max(phi(nf, s, t, nu));
        }
        for (i, &t) in ts.iter().enumerate() {
            let hi = ts.partition_point(|&x| x <= t) as f64 / nf;
            let lo = i as f64 / nf; // ECDF left limit at the i-th order stat
            best = best.max(phi(nf, hi, t, nu));
            best = best.max(phi(nf, lo, t, nu));
        }
        best
    }

    #[test]
    fn divergence_identities() {
        for t in [0.1, 0.37, 0.5, 0.93] {
            assert_eq!(divergence_k(t, t).unwrap(), 0.0);
            assert!((divergence_k(0.0, t).unwrap() + (1.0 - t).ln()).abs() < 1e-15);
            assert!((divergence_k(1.0, t).unwrap() + t.ln()).abs() < 1e-15);
        }
        // K(1/2, 1/4) = ½ ln 2 + ½ ln(2/3) = ½ ln(4/3).
        let k = divergence_k(0.5, 0.25).unwrap();
        assert!((k - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((k - 0.143841).abs() < 1e-6);
        // Nonnegativity, zero only on the diagonal.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s: f64 = rng.gen();
            let t: f64 = 0.001 + 0.998 * rng.gen::<f64>();
            let k = divergence_k(s, t).unwrap();
            assert!(k >= 0.0);
            if (s - t).abs() > 1e-3 {
                assert!(k > 0.0);
            }
        }
        assert!(divergence_k(0.5, 0.0).is_err());
        assert!(divergence_k(0.5, 1.0).is_err());
        assert!(divergence_k(-0.1, 0.5).is_err());
        assert!(divergence_k(1.1, 0.5).is_err());
    }

    #[test]
    fn trend_reference_values_and_symmetry() {
        assert_eq!(trend_g_nu(1.0, 0.5).unwrap(), 0.0);
        assert_eq!(trend_g_nu(7.0, 0.5).unwrap(), 0.0);
        // t = 0.01, ν = 1: m = 1 − ln 0.0396 = 4.2289262, c = ln m =
        // 1.4419481, g = c + ln(1 + c²) = 2.5666226 (30-digit evaluation).
        let g = trend_g_nu(1.0, 0.01).unwrap();
        assert!((g - 2.566_622_570_891_444).abs() < 1e-12, "g = {g}");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let t: f64 = 0.001 + 0.498 * rng.gen::<f64>();
            let nu: f64 = 3.0 * rng.gen::<f64>();
            let a = trend_g_nu(nu, t).unwrap();
            let b = trend_g_nu(nu, 1.0 - t).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "asymmetry at t = {t}");
            // Must agree with the model-side trend (scale 1).
            let model_side = TrendFunction::g_nu(nu).unwrap().eval(t);
            assert!((a - model_side).abs() <= 1e-12 * a.abs().max(1.0));
        }
        assert!(trend_g_nu(1.0, 0.0).is_err());
        assert!(trend_g_nu(1.0, 1.0).is_err());
    }

    #[test]
    fn single_point_sample_attains_ln_two() {
        // n = 1, sample {1/2}, ν = 1: on (0, ½) the inner function
        // −ln(1−t) − g_ν(t) increases to ln 2 at ½⁻; on [½, 1) the value
        // −ln t − g_ν(t) starts at ln 2 and decreases.  L = ln 2 exactly.
        let sample = Sample::new(vec![0.5]).unwrap();
        let l = compute_l(&sample, 1.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12, "L = {l}");
        let oracle = brute_force_l(&sample, 1.0, 1_000_000);
        assert!((l - oracle).abs() < 1e-6, "L = {l} vs oracle {oracle}");
    }

    #[test]
    fn analytic_maximization_matches_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for rep in 0..20 {
            let n = [1usize, 5, 50][rep % 3];
            let nu = [0.8, 1.0, 1.7][(rep / 3) % 3];
            let values: Vec<f64> = (0..n).map(|_| 0.001 + 0.998 * rng.gen::<f64>()).collect();
            let sample = Sample::new(values).unwrap();
            let l = compute_l(&sample, nu).unwrap();
            let oracle = brute_force_l(&sample, nu, 1_000_000);
            assert!(
                (l - oracle).abs() < 1e-6,
                "rep {rep} (n = {n}, nu = {nu}): L = {l} vs oracle {oracle}"
            );
            assert!(l >= oracle - 1e-12, "the analytic supremum can never fall below a grid value");
        }
    }

    #[test]
    fn statistic_ignores_sample_order() {
        let a = Sample::new(vec![0.7, 0.2, 0.41, 0.9, 0.05]).unwrap();
        let b = Sample::new(vec![0.05, 0.9, 0.2, 0.41, 0.7]).unwrap();
        assert_eq!(compute_l(&a, 1.0).unwrap(), compute_l(&b, 1.0).unwrap());
    }

    #[test]
    fn tied_values_jump_the_empirical_cdf_by_two() {
        let sample = Sample::new(vec![0.3, 0.3]).unwrap();
        let l = compute_l(&sample, 1.0).unwrap();
        let oracle = brute_force_l(&sample, 1.0, 1_000_000);
        assert!((l - oracle).abs() < 1e-6, "L = {l} vs oracle {oracle}");
    }

    #[test]
    fn statistic_is_nonincreasing_in_nu() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..25).map(|_| 0.01 + 0.98 * rng.gen::<f64>()).collect();
        let sample = Sample::new(values).unwrap();
        let ls: Vec<f64> = [0.8, 1.0, 1.5, 2.0]
            .iter()
            .map(|&nu| compute_l(&sample, nu).unwrap())
            .collect();
        for w in ls.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "L must not increase in nu: {ls:?}");
        }
    }

    #[test]
    fn supremum_dominates_every_sample_point_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..40).map(|_| 0.01 + 0.98 * rng.gen::<f64>()).collect();
        let sample = Sample::new(values).unwrap();
        let nu = 1.0;
        let l = compute_l(&sample, nu).unwrap();
        let nf = sample.n() as f64;
        for (i, &t) in sample.sorted().iter().enumerate() {
            let right = (i + 1) as f64 / nf;
            let left = i as f64 / nf;
            assert!(l >= phi(nf, right, t, nu) - 1e-12);
            assert!(l >= phi(nf, left, t, nu) - 1e-12);
        }
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![0.5, 0.0]).is_err());
        assert!(Sample::new(vec![0.5, 1.0]).is_err());
        assert!(Sample::new(vec![0.5, f64::NAN]).is_err());
        assert!(Sample::new(vec![0.5, -0.1]).is_err());
    }

    #[test]
    fn p_value_domain_and_cap() {
        let opts = ApproxOptions::default();
        assert!(matches!(p_value(20.0, 0.7, &opts), Err(Error::NotApplicable(_))));
        assert!(matches!(p_value(20.0, 0.75, &opts), Err(Error::NotApplicable(_))));
        let small = p_value(0.5, 1.0, &opts).unwrap();
        assert_eq!(small.p_value, 1.0);
        assert!(small.capped);
        assert_eq!(small.method, "asymptotic");
        let zero = p_value(0.0, 1.0, &opts).unwrap();
        assert_eq!(zero.p_value, 1.0);
    }

    #[test]
    fn p_value_strictly_decreases_where_uncapped() {
        let opts = ApproxOptions::default();
        let ps: Vec<f64> = [10.0, 12.0, 14.0, 18.0, 25.0]
            .iter()
            .map(|&u| p_value(u, 1.0, &opts).unwrap().p_value)
            .collect();
        for w in ps.windows(2) {
            assert!(w[1] < w[0], "p-values must strictly decrease: {ps:?}");
        }
        assert!(ps[0] < 1.0);
    }

    #[test]
    fn p_value_matches_independent_quadrature() {
        // Substituting z = ln(1 + y) with y = −ln(4t(1−t)) turns the
        // weight integral into
        //   I = 2 ∫₀^∞ dz / ((1+z²)^ν √(1 − e^{−(e^z − 1)})),
        // whose integrand is exactly (1+z²)^{−ν} beyond small z (at z = 8
        // the correction is e^{−2980}); for ν = 1 the far tail is analytic
        // (∫_Z^∞ = π/2 − arctan Z).  The 1/√z endpoint singularity is
        // removed by z = w²: 1 − e^{−(e^z−1)} = z(1 − z²/6 + O(z³)), so
        // the transformed integrand tends to 2 at w = 0.
        let quad = QuadOptions::default();
        let h = |w: f64| {
            if w < 1e-4 {
                return 2.0 / (1.0 + w.powi(4));
            }
            let z = w * w;
            let y = z.exp() - 1.0;
            let sqrt_term = (-(-y).exp_m1()).sqrt();
            2.0 * w / ((1.0 + z * z) * sqrt_term)
        };
        let head = adaptive(&h, 0.0, 8f64.sqrt(), &quad).unwrap().value;
        let tail = std::f64::consts::FRAC_PI_2 - 8f64.atan();
        let oracle = 2.0 * (head + tail);

        let opts = ApproxOptions::default();
        let rep = p_value(20.0, 1.0, &opts).unwrap();
        assert!(
            (rep.integral - oracle).abs() < 1e-8 * oracle,
            "integral {} vs oracle {oracle}",
            rep.integral
        );
        let formula = 20f64.sqrt() * (-10.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt() * oracle;
        assert!((rep.p_value - formula).abs() < 1e-8 * formula);
        assert!(!rep.capped);
    }

    #[test]
    fn p_value_agrees_with_the_general_tail_formula() {
        // The limiting statistic is the supremum of a drifted squared
        // bridge, so the dedicated p-value must equal the general
        // chi-square tail approximation of that model.
        let opts = ApproxOptions::default();
        let bridge = ChiSquareModel::bridge();
        let trend = TrendFunction::g_nu_scaled(1.0, 2.0).unwrap();
        for u in [12.0, 20.0, 30.0] {
            let direct = p_value(u, 1.0, &opts).unwrap();
            let general = tail_approx(&bridge, &trend, u, &opts).unwrap();
            assert!(
                (direct.p_value - general.probability).abs() <= 1e-10 * general.probability,
                "u = {u}: {} vs {}",
                direct.p_value,
                general.probability
            );
        }
    }
}
