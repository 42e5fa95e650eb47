//! Measurements on simulated observer traces: least-squares sinusoid fits,
//! quasi-steady-state phasors, one-period integrals and envelope decay rates.
//!
//! A phasor `Z` stands for the signal `Re(Z e^{jωt}) = |Z| cos(ωt + arg Z)`, the same
//! convention as the closed forms in [`crate::steady_state`].

use std::f64::consts::PI;

use thiserror::Error;

use crate::observer::{output, step, ObserverError, ObserverGains, ObserverState, StageInputs};
use crate::Complex64;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("sample columns differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("least-squares system is singular")]
    Singular,
    #[error("invalid protocol setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Observer(#[from] ObserverError),
}

/// Least-squares fit of `values ≈ a cos(ωt) + b sin(ωt)`, returned as the phasor `a − jb`.
pub fn fit_sinusoid(times: &[f64], values: &[f64], omega: f64) -> Result<Complex64, AnalysisError> {
    if times.len() != values.len() {
        return Err(AnalysisError::LengthMismatch(times.len(), values.len()));
    }
    if times.len() < 2 {
        return Err(AnalysisError::TooFewSamples { need: 2, got: times.len() });
    }
    let (mut cc, mut cs, mut ss, mut cy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &v) in times.iter().zip(values) {
        let (s, c) = (omega * t).sin_cos();
        cc += c * c;
        cs += c * s;
        ss += s * s;
        cy += c * v;
        sy += s * v;
    }
    let det = cc * ss - cs * cs;
    if !(det.abs() > 1e-12 * (cc * ss).max(f64::MIN_POSITIVE)) {
        return Err(AnalysisError::Singular);
    }
    let a = (ss * cy - cs * sy) / det;
    let b = (cc * sy - cs * cy) / det;
    Ok(Complex64::new(a, -b))
}

/// Transient/fit windows in periods of the probe frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateProtocol {
    pub settle_periods: usize,
    pub fit_periods: usize,
    pub steps_per_period: usize,
}

impl Default for SteadyStateProtocol {
    fn default() -> Self {
        Self { settle_periods: 10, fit_periods: 5, steps_per_period: 1000 }
    }
}

impl SteadyStateProtocol {
    fn check(&self) -> Result<(), AnalysisError> {
        if self.fit_periods == 0 || self.steps_per_period < 8 {
            return Err(AnalysisError::InvalidSetting(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Fitted phasors of every state component and of `e_y` for the input `cos(ωt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStatePhasors {
    pub omega: f64,
    pub states: Vec<Complex64>,
    pub error: Complex64,
}

impl SteadyStatePhasors {
    /// Phasor of the linear functional `wᵀx̂`.
    pub fn combine(&self, w: &[f64]) -> Complex64 {
        self.states.iter().zip(w).map(|(z, &c)| z * c).sum()
    }
}

// Runs the observer at held `ω̂` on `amplitude · cos(ωt)` from a zero state for
// `periods` periods, calling `visit` after every step.
fn simulate_probe<F: FnMut(&ObserverState)>(
    gains: &ObserverGains,
    omega_hat: f64,
    omega: f64,
    amplitude: f64,
    periods: usize,
    steps_per_period: usize,
    mut visit: F,
) -> Result<f64, AnalysisError> {
    let h = 2.0 * PI / (omega * steps_per_period as f64);
    let input = |t: f64| amplitude * (omega * t).cos();
    let mut state = ObserverState::zeros(gains.n());
    for k in 0..periods * steps_per_period {
        let t = k as f64 * h;
        let stages = StageInputs { start: input(t), mid: input(t + 0.5 * h), end: input(t + h) };
        state = step(&state, stages, omega_hat, gains, h)?;
        // keep the clock exact on the sampling grid
        state.t = (k + 1) as f64 * h;
        visit(&state);
    }
    Ok(h)
}

/// Quasi-steady-state phasors: discard the settle window, then fit over the fit window.
pub fn quasi_steady_state(
    gains: &ObserverGains,
    omega_hat: f64,
    omega: f64,
    protocol: SteadyStateProtocol,
) -> Result<SteadyStatePhasors, AnalysisError> {
    protocol.check()?;
    let dim = 2 * gains.n();
    let skip = protocol.settle_periods * protocol.steps_per_period;
    let total = protocol.settle_periods + protocol.fit_periods;
    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); dim + 1];
    let mut count = 0usize;
    simulate_probe(gains, omega_hat, omega, 1.0, total, protocol.steps_per_period, |s| {
        count += 1;
        if count > skip {
            times.push(s.t);
            for (col, v) in columns.iter_mut().zip(&s.x) {
                col.push(*v);
            }
            columns[dim].push((omega * s.t).cos() - output(&s.x));
        }
    })?;
    let mut fits = columns.iter().map(|col| fit_sinusoid(&times, col, omega)).collect::<Result<Vec<_>, _>>()?;
    let error = fits.pop().expect("error column");
    Ok(SteadyStatePhasors { omega, states: fits, error })
}

/// Trapezoidal `∫ e_y λᵀx̂ dτ` over the period following the settle window, for the
/// input `amplitude · cos(ωt)` at held `ω̂`.
pub fn simulated_one_period_integral(
    gains: &ObserverGains,
    lambda: &[f64],
    omega_hat: f64,
    omega: f64,
    amplitude: f64,
    protocol: SteadyStateProtocol,
) -> Result<f64, AnalysisError> {
    protocol.check()?;
    let start = protocol.settle_periods * protocol.steps_per_period;
    let end = start + protocol.steps_per_period;
    let mut values = Vec::with_capacity(protocol.steps_per_period + 1);
    let mut count = 0usize;
    let h = simulate_probe(
        gains,
        omega_hat,
        omega,
        amplitude,
        protocol.settle_periods + 1,
        protocol.steps_per_period,
        |s| {
            count += 1;
            if count >= start && count <= end {
                let e = amplitude * (omega * s.t).cos() - output(&s.x);
                let lx: f64 = lambda.iter().zip(&s.x).map(|(l, x)| l * x).sum();
                values.push(e * lx);
            }
        },
    )?;
    if protocol.settle_periods == 0 {
        // the zero initial state contributes 0 at t = 0
        values.insert(0, 0.0);
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    Ok(h * (inner + 0.5 * (values[0] + values[values.len() - 1])))
}

/// Exponential decay rate of an oscillating trace from a log-envelope fit.
///
/// The trace is cut into consecutive windows of `window` seconds. The maximum of
/// each window is fitted by `ln env ≈ c − σ t` over window centres, and `σ` is returned.
/// Windows whose maximum lies below `floor` are ignored.
pub fn envelope_decay_rate(times: &[f64], values: &[f64], window: f64, floor: f64) -> Result<f64, AnalysisError> {
    if times.len() != values.len() {
        return Err(AnalysisError::LengthMismatch(times.len(), values.len()));
    }
    if !(window > 0.0) {
        return Err(AnalysisError::InvalidSetting(format!("window {window}")));
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut k = 0;
    while k < times.len() {
        let w0 = times[k];
        let mut peak = (0.0f64, w0);
        while k < times.len() && times[k] < w0 + window {
            if values[k].abs() > peak.0 {
                peak = (values[k].abs(), times[k]);
            }
            k += 1;
        }
        if peak.0 > floor {
            points.push((peak.1, peak.0.ln()));
        }
    }
    if points.len() < 3 {
        return Err(AnalysisError::TooFewSamples { need: 3, got: points.len() });
    }
    let n = points.len() as f64;
    let (mt, ml) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (sxy, sxx) =
        points.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mt) * (p.1 - ml), b + (p.0 - mt) * (p.0 - mt)));
    if !(sxx > 0.0) {
        return Err(AnalysisError::Singular);
    }
    Ok(-sxy / sxx)
}
