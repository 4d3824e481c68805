//! Numerical plumbing: deterministic quadrature, improper-integral
//! classification, monotone root finding, and small statistical helpers.
//!
//! Everything in this module is deterministic (no RNG) and scale-aware: the
//! integrands that show up in the tail asymptotics concentrate mass at
//! logarithmic and iterated-logarithmic depths near interval endpoints
//! (think `t = e^{-e^{40}}`), so the improper driver works in substituted
//! coordinates rather than raw `t`.

pub mod gauss;
pub mod improper;
pub mod invert;
pub mod quad;
pub mod stats;

pub use improper::{integrate_tail, Finiteness, ScaledTail, TailOptions, TailOutcome};
pub use invert::bisect_increasing;
pub use quad::{adaptive, QuadOptions, QuadOutcome};
