//! Harmonic estimation of distorted single-phase signals.
//!
//! The crate models a signal as a sum of harmonics with time-varying amplitude
//! and fundamental frequency, and estimates every harmonic in real time with a
//! bank of parallel second-order generalized integrators (SOGIs). The modified
//! SOGI adds a second feedback gain per harmonic so that all observer poles can
//! be placed analytically; the fundamental frequency is tracked by a
//! frequency-locked loop with gain normalization, sign-correct anti-windup and
//! rate limitation.
//!
//! Module map:
//!
//! * [`signal`] generates the input signal and its true internal-model state.
//! * [`observer`] holds the parallel observer ODE and its RK4 integrator.
//! * [`placement`] computes observer gains from a desired pole set.
//! * [`fll`] implements the standard and modified frequency-locked loops.
//! * [`extraction`] turns observer states into amplitudes, phases and metrics.
//! * [`steady_state`] evaluates closed-form quasi-steady-state responses.
//! * [`analysis`] measures the same quantities on simulated traces.
//! * [`scenario`] parses scenario files, runs them and exports traces.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod extraction;
pub mod fll;
pub mod observer;
pub mod placement;
pub mod scenario;
pub mod signal;
pub mod steady_state;

mod error;

pub use error::{Error, Result};
pub use nalgebra::Complex;

/// Complex number type used for poles and frequency responses.
pub type Complex64 = Complex<f64>;
