//! Process models: kernels, variance profiles, trends, components, and the
//! chi-square model container, plus the `f`-change-of-time.
//!
//! A [`ChiSquareModel`] is a vector of variance-normalized Gaussian
//! [`Component`]s with weights `1 = b_1 = … = b_k > b_{k+1} ≥ … ≥ b_n > 0`
//! and a time interval.  Each component carries the local description of its
//! correlation near the diagonal (`1 − r(s,t) ≈ C(t)·K²(|t−s|)`), which is
//! all the asymptotics consume, and — for catalog processes — the exact
//! global correlation, which is what simulation and condition checking
//! consume.

mod catalog;
pub(crate) mod ftrans;
pub(crate) mod integrand;
pub mod kernel;
pub mod trend;
pub mod variance;

pub use ftrans::{f_inverse, f_limits, f_transform, partition_points, FLimits};
pub use kernel::{KernelForm, RegVarKernel};
pub use trend::{TrendForm, TrendFunction};
pub use variance::{LocalVariance, PowShape, VarianceForm};

use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// An endpoint side of a sub-interval of `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// The left (lower) endpoint.
    Lo,
    /// The right (upper) endpoint.
    Hi,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Lo, Side::Hi];
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Lo => write!(f, "lower"),
            Side::Hi => write!(f, "upper"),
        }
    }
}

/// Sub-interval of `[0, 1]` with explicit endpoint openness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
    open_lo: bool,
    open_hi: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, open_lo: bool, open_hi: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi)) {
            return Err(Error::invalid(format!("interval endpoints must lie in [0, 1], got [{lo}, {hi}]")));
        }
        if !(lo < hi) {
            return Err(Error::invalid(format!("interval must be nondegenerate, got [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi, open_lo, open_hi })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    /// `(lo, hi]`.
    pub fn left_open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, false)
    }

    /// `[lo, hi)`.
    pub fn right_open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, true)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_open(&self, side: Side) -> bool {
        match side {
            Side::Lo => self.open_lo,
            Side::Hi => self.open_hi,
        }
    }

    pub fn endpoint(&self, side: Side) -> f64 {
        match side {
            Side::Lo => self.lo,
            Side::Hi => self.hi,
        }
    }

    /// A side is *singular* when the interval approaches 0 or 1 without
    /// attaining it — there the variance profile may blow up and
    /// constant-level asymptotics need the global validity conditions.
    pub fn singular(&self, side: Side) -> bool {
        match side {
            Side::Lo => self.open_lo && self.lo == 0.0,
            Side::Hi => self.open_hi && self.hi == 1.0,
        }
    }

    /// Whether any side is singular.
    pub fn has_singular_side(&self) -> bool {
        self.singular(Side::Lo) || self.singular(Side::Hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        let lo_ok = if self.open_lo { t > self.lo } else { t >= self.lo };
        let hi_ok = if self.open_hi { t < self.hi } else { t <= self.hi };
        lo_ok && hi_ok
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.open_lo { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.open_hi { ')' } else { ']' },
        )
    }
}

/// Exact correlation structure of a component (used by simulation and the
/// pairwise condition checks; the asymptotics only use `(C, K, α)`).
#[derive(Clone)]
pub enum CorrKind {
    /// Brownian bridge divided by its standard deviation `√(t(1−t))`.
    BridgeNorm,
    /// Brownian motion divided by `√t`.
    BmNorm,
    /// Fractional Brownian motion (Hurst `h`) divided by `t^h`.
    FbmNorm { h: f64 },
    /// Stationary Ornstein–Uhlenbeck with rate `lambda`.
    OuStat { lambda: f64 },
    /// Stationary with user-supplied correlation `r(τ)`, `r(0) = 1`.
    StationaryCorr(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Fully general user-supplied correlation `r(s, t)`, `r(t, t) = 1`.
    /// No sampler; used by the pairwise condition checks only.
    PairCorr(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    /// Local description only; no exact correlation, no sampler.
    Unavailable,
}

impl fmt::Debug for CorrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrKind::BridgeNorm => write!(f, "BridgeNorm"),
            CorrKind::BmNorm => write!(f, "BmNorm"),
            CorrKind::FbmNorm { h } => write!(f, "FbmNorm {{ h: {h} }}"),
            CorrKind::OuStat { lambda } => write!(f, "OuStat {{ lambda: {lambda} }}"),
            CorrKind::StationaryCorr(_) => write!(f, "StationaryCorr(..)"),
            CorrKind::PairCorr(_) => write!(f, "PairCorr(..)"),
            CorrKind::Unavailable => write!(f, "Unavailable"),
        }
    }
}

/// One variance-normalized Gaussian component.
#[derive(Clone, Debug)]
pub struct Component {
    label: String,
    kernel: RegVarKernel,
    variance: LocalVariance,
    corr: CorrKind,
}

impl Component {
    pub fn new(label: impl Into<String>, kernel: RegVarKernel, variance: LocalVariance, corr: CorrKind) -> Self {
        Component { label: label.into(), kernel, variance, corr }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kernel(&self) -> &RegVarKernel {
        &self.kernel
    }

    pub fn variance(&self) -> &LocalVariance {
        &self.variance
    }

    pub fn corr(&self) -> &CorrKind {
        &self.corr
    }

    /// Exact correlation `r(s, t)`, if the component carries one.
    pub fn correlation(&self, s: f64, t: f64) -> Result<f64> {
        catalog::correlation(&self.corr, s, t)
    }

    /// `1 − r(s, t)` computed without cancellation.
    pub fn one_minus_correlation(&self, s: f64, t: f64) -> Result<f64> {
        catalog::one_minus_correlation(&self.corr, s, t)
    }

    /// `1 − r` between the points `t_i = e^{-x_i}` (side `Lo`) or
    /// `1 − e^{-x_i}` (side `Hi`), valid even where `t` itself underflows.
    pub fn one_minus_correlation_near(&self, side: Side, x1: f64, x2: f64) -> Result<f64> {
        catalog::one_minus_correlation_near(&self.corr, side, x1, x2)
    }

    /// Structural equality of the local description (kernel + variance).
    pub fn same_local_structure(&self, other: &Self) -> bool {
        self.kernel.same_structure(&other.kernel) && self.variance.same_structure(&other.variance)
    }
}

/// Weighted sum of squared components over an interval.
#[derive(Clone, Debug)]
pub struct ChiSquareModel {
    components: Vec<Component>,
    weights: Vec<f64>,
    interval: Interval,
}

impl ChiSquareModel {
    pub fn new(components: Vec<Component>, weights: Vec<f64>, interval: Interval) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("model needs at least one component"));
        }
        if components.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        for (i, &b) in weights.iter().enumerate() {
            if !(b > 0.0 && b <= 1.0 && b.is_finite()) {
                return Err(Error::invalid(format!("weight {i} must lie in (0, 1], got {b}")));
            }
            if i > 0 && b > weights[i - 1] {
                return Err(Error::invalid("weights must be sorted in non-increasing order"));
            }
        }
        if weights[0] != 1.0 {
            return Err(Error::invalid("the leading weight must equal 1"));
        }
        for c in &components {
            catalog::check_domain(&c.corr, &interval, &c.label)?;
        }
        Ok(ChiSquareModel { components, weights, interval })
    }

    /// Number of components `n`.
    pub fn n(&self) -> usize {
        self.components.len()
    }

    /// Number of unit weights `k`.
    pub fn k(&self) -> usize {
        self.weights.iter().filter(|&&b| b == 1.0).count()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Component {
        &self.components[i]
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Same local structure across all components?
    pub fn homogeneous(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.same_local_structure(&self.components[0]))
    }

    /// Kernel index of the leading component.
    pub fn alpha(&self) -> f64 {
        self.components[0].kernel().alpha()
    }

    /// JSON-friendly description for manifests and reports.
    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "components": self.components.iter().map(|c| c.label()).collect::<Vec<_>>(),
            "weights": self.weights,
            "interval": format!("{}", self.interval),
        })
    }

    // ----- catalog constructors -----

    /// Normalized Brownian bridge `B(t)/√(t(1−t))` on `(0, 1)`.
    pub fn bridge() -> Self {
        catalog::bridge()
    }

    /// `n` independent normalized Brownian motions `W_i(t)/√t` on `(0, 1]`
    /// (the squared norm of an `n`-dimensional Bessel-type process over `t`).
    pub fn bessel(n: usize) -> Result<Self> {
        catalog::bessel(n)
    }

    /// `n` independent normalized fractional Brownian motions `B_H(t)/t^H`
    /// on `(0, 1]`.
    pub fn fbm(h: f64, n: usize) -> Result<Self> {
        catalog::fbm(h, n)
    }

    /// `n` independent stationary Ornstein–Uhlenbeck processes with
    /// correlation `e^{-λ|τ|}` on `[0, 1]`.
    pub fn ou(lambda: f64, n: usize) -> Result<Self> {
        catalog::ou(lambda, n)
    }

    /// The mixed three-component sum: normalized bridge + normalized
    /// Brownian motion + normalized fBm with Hurst `h ∈ (1/2, 1)`, all with
    /// unit weights, on `(0, 1)`.  The first two components share the
    /// rough kernel; the fBm component is asymptotically smoother.
    pub fn triple_sum(h: f64) -> Result<Self> {
        catalog::triple_sum(h)
    }

    /// Replace the interval (e.g. to truncate for simulation studies).
    pub fn with_interval(&self, interval: Interval) -> Result<Self> {
        Self::new(self.components.clone(), self.weights.clone(), interval)
    }
}
