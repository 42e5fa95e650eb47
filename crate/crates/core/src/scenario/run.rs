//! The per-step simulation loop.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Scenario, ScenarioError};
use crate::extraction::extract;
use crate::fll::{fll_step, FllState, FllVariant};
use crate::observer::{step, ObserverState, StageInputs};
use crate::signal::LowPassFilter;

/// Per-harmonic columns of a [`TraceRow`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicColumns {
    pub yhat: f64,
    pub qhat: f64,
    pub ahat: f64,
    /// `None` while the block is exactly zero.
    pub phihat: Option<f64>,
    /// `y_ν − ŷ_ν` against the noise-free component.
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// The sample the observer sees (after optional noise and low-pass).
    pub y: f64,
    pub yhat: f64,
    pub e_y: f64,
    pub omega_hat: f64,
    pub harmonics: Vec<HarmonicColumns>,
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Vec<TraceRow>,
    pub failure: Option<RunFailure>,
}

// Measured input: optional uniform noise and low-pass on the raw samples.
struct Measurement {
    noise: Option<(ChaCha8Rng, Uniform<f64>)>,
    lpf: Option<LowPassFilter>,
}

impl Measurement {
    fn new(scenario: &Scenario) -> Result<Self, ScenarioError> {
        let noise = scenario
            .sim
            .noise_amp
            .map(|a| (ChaCha8Rng::seed_from_u64(scenario.sim.seed), Uniform::new_inclusive(-a, a)));
        let lpf = match scenario.sim.lpf {
            Some(c) => Some(
                LowPassFilter::new(c, scenario.sim.step)
                    .map_err(|e| ScenarioError::Field { field: "sim.lpf_rad_s".into(), message: e.to_string() })?,
            ),
            None => None,
        };
        Ok(Self { noise, lpf })
    }

    fn is_exact(&self) -> bool {
        self.noise.is_none() && self.lpf.is_none()
    }

    fn measure(&mut self, raw: f64) -> f64 {
        let mut y = raw;
        if let Some((rng, dist)) = &mut self.noise {
            y += dist.sample(rng);
        }
        if let Some(lpf) = &mut self.lpf {
            y = lpf.filter(y);
        }
        y
    }
}

fn row(scenario: &Scenario, t: f64, y: f64, state: &ObserverState, omega_hat: f64) -> Result<TraceRow, ScenarioError> {
    let orders = scenario.signal.harmonics().orders();
    let yhat = crate::observer::output(&state.x);
    let harmonics = extract(&state.x, orders)
        .into_iter()
        .enumerate()
        .map(|(i, est)| {
            Ok(HarmonicColumns {
                yhat: est.y,
                qhat: est.q,
                ahat: est.amplitude,
                phihat: est.phase,
                e: scenario.signal.harmonic_component(i, t)? - est.y,
            })
        })
        .collect::<Result<Vec<_>, crate::signal::SignalError>>()?;
    Ok(TraceRow { t, y, yhat, e_y: y - yhat, omega_hat, harmonics })
}

/// Simulates the scenario on the grid `t_k = k h`.
///
/// Per step: sample `y(t_k)`, log at the cadence, advance the FLL with `e_y(t_k)`
/// and `x̂(t_k)`, then advance the observer with the `ω̂(t_k)` of the step start.
/// Noise-free, unfiltered inputs are sampled exactly at the RK4 stage times;
/// measured inputs are held over the step. A divergence ends the run and keeps
/// the trace up to the failing step.
pub fn run(scenario: &Scenario) -> Result<RunOutput, ScenarioError> {
    let sim = &scenario.sim;
    let h = sim.step;
    let mut meas = Measurement::new(scenario)?;
    let exact = meas.is_exact();
    let signal = &scenario.signal;

    let mut state = ObserverState::zeros(scenario.gains.n());
    let mut fll = FllState::new(scenario.omega0);
    let mut trace = Vec::with_capacity(sim.steps / sim.log_every + 2);
    let mut failure = None;

    for k in 0..=sim.steps {
        let t = k as f64 * h;
        let y = meas.measure(signal.sample(t)?);
        let omega_hat = match scenario.fll.variant {
            FllVariant::Off => signal.omega_at(t),
            _ => fll.omega_hat,
        };
        if k % sim.log_every == 0 || k == sim.steps {
            trace.push(row(scenario, t, y, &state, omega_hat)?);
        }
        if k == sim.steps {
            break;
        }
        if !omega_hat.is_finite() {
            failure = Some(RunFailure { t, message: format!("divergence: frequency estimate is {omega_hat}") });
            break;
        }
        let inputs = if exact {
            StageInputs { start: y, mid: signal.sample(t + 0.5 * h)?, end: signal.sample(t + h)? }
        } else {
            StageInputs::held(y)
        };
        let e_y = y - crate::observer::output(&state.x);
        if scenario.fll.variant != FllVariant::Off {
            fll = fll_step(&scenario.fll, &FllState { omega_hat, ..fll }, e_y, &state.x, h);
        }
        match step(&state, inputs, omega_hat, &scenario.gains, h) {
            Ok(mut next) => {
                next.t = (k + 1) as f64 * h;
                state = next;
            }
            Err(e) => {
                log::warn!("{}: run stopped at t = {t}: {e}", scenario.label);
                failure = Some(RunFailure { t, message: format!("divergence: {e}") });
                break;
            }
        }
    }
    Ok(RunOutput { trace, failure })
}
