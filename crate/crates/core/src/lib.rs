//! Tail asymptotics for suprema of locally stationary chi-square processes
//! with trend.
//!
//! The library answers questions of the form: given a vector of centered,
//! variance-normalized Gaussian processes `X_i` on a sub-interval of `(0,1)`
//! whose correlations degenerate like `1 - r(s,t) ≈ C(t)·K²(|t-s|)` near the
//! diagonal, weights `b_i`, and a drift (trend) function `g`, how does
//!
//! ```text
//! P( sup_t [ Σ b_i² X_i²(t) − g(t) ] > u )
//! ```
//!
//! behave as `u → ∞`?  The answer is a product of a Pickands-type constant,
//! a weight constant, a trend-weighted integral of `C^{1/α}`, and explicit
//! polynomial/exponential factors in `u`.  Everything here is organized
//! around computing that product honestly and then checking it:
//!
//! * [`model`] — process descriptions: correlation kernels `K`, local
//!   variance shapes `C`, trend functions, the `f`-change-of-time, and a
//!   catalog of standard processes (normalized Brownian bridge and motion,
//!   normalized fractional Brownian motion, stationary Ornstein–Uhlenbeck).
//! * [`asymptotics`] — the approximation itself: constants, the trend
//!   integral, heterogeneous (per-component) variants, published closed
//!   forms for special cases, and critical-level inversion.
//! * [`admissibility`] — numerical verdicts (pass / fail / inconclusive)
//!   for the validity conditions the asymptotics need on open intervals
//!   where `C` blows up at an endpoint.
//! * [`simulate`] — exact-law Gaussian path samplers with reproducible,
//!   thread-count-independent seeding.
//! * [`montecarlo`] — estimators of the same tail probabilities by brute
//!   force, the ratio estimator for Pickands constants, comparison tables,
//!   and a Slepian-type two-model bound check.
//! * [`gof`] — the goodness-of-fit statistic whose limiting tail is one of
//!   the closed forms above, with exact sup computation over the empirical
//!   CDF and an asymptotic p-value.
//!
//! Numerical plumbing (adaptive quadrature, improper-integral window
//! cascades with divergence detection, monotone inversion) lives in [`num`].
//!
//! Two conventions apply everywhere: intervals are sub-intervals of `[0,1]`
//! with explicit open/closed endpoints, and all randomized routines take an
//! explicit `(seed, stream)` pair — results are bit-for-bit reproducible for
//! a given seed regardless of thread count.

pub mod admissibility;
pub mod asymptotics;
pub mod error;
pub mod gof;
pub mod model;
pub mod montecarlo;
pub mod num;
pub mod simulate;

pub use error::{Error, Result};
