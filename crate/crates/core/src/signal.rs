//! Distorted single-phase test signals.
//!
//! A signal is `y(t) = Σ a_ν(t) cos(φ_ν(t))` with `φ_ν(t) = ν ∫₀ᵗ ω(τ) dτ + φ_ν,0`.
//! Amplitudes, phase offsets and the fundamental angular frequency are
//! piecewise constant on left-closed, right-open segments. The phase integral
//! is continuous through frequency jumps; amplitudes and phase offsets may jump.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("invalid harmonic set: {0}")]
    InvalidHarmonics(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid low-pass filter: {0}")]
    InvalidFilter(String),
}

/// Ordered harmonic orders `1 = ν₁ < ν₂ < … < νₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSet {
    orders: Vec<f64>,
}

impl HarmonicSet {
    pub fn new(orders: Vec<f64>) -> Result<Self, SignalError> {
        if orders.is_empty() {
            return Err(SignalError::InvalidHarmonics("at least one harmonic is required".into()));
        }
        if orders[0] != 1.0 {
            return Err(SignalError::InvalidHarmonics(format!(
                "the first order must be the fundamental 1, got {}",
                orders[0]
            )));
        }
        for (i, pair) in orders.windows(2).enumerate() {
            if !pair[1].is_finite() || pair[1] <= 0.0 {
                return Err(SignalError::InvalidHarmonics(format!(
                    "order #{} must be a positive number, got {}",
                    i + 2,
                    pair[1]
                )));
            }
            if pair[1] == pair[0] {
                return Err(SignalError::InvalidHarmonics(format!(
                    "duplicate order {} at positions {} and {}",
                    pair[0],
                    i + 1,
                    i + 2
                )));
            }
            if pair[1] < pair[0] {
                return Err(SignalError::InvalidHarmonics(format!(
                    "orders must be strictly increasing, {} follows {}",
                    pair[1], pair[0]
                )));
            }
        }
        Ok(Self { orders })
    }

    /// Orders `1, 2, …, n`.
    pub fn integer(n: usize) -> Result<Self, SignalError> {
        Self::new((1..=n).map(|v| v as f64).collect())
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Dimension of the stacked state, `2n`.
    pub fn state_dim(&self) -> usize {
        2 * self.orders.len()
    }
}

/// One piece of a harmonic's amplitude/phase schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSegment {
    pub start: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Per-harmonic amplitude and phase-offset schedules.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSchedule {
    harmonics: Vec<Vec<AmplitudeSegment>>,
}

fn check_starts<I: Iterator<Item = f64>>(what: &str, starts: I) -> Result<(), SignalError> {
    let mut prev: Option<f64> = None;
    for s in starts {
        match prev {
            None if s != 0.0 => {
                return Err(SignalError::InvalidSchedule(format!("{what}: first segment must start at 0, got {s}")))
            }
            Some(p) if !(s > p) => {
                return Err(SignalError::InvalidSchedule(format!(
                    "{what}: segment starts must be strictly increasing ({s} after {p})"
                )))
            }
            _ => {}
        }
        prev = Some(s);
    }
    if prev.is_none() {
        return Err(SignalError::InvalidSchedule(format!("{what}: no segments")));
    }
    Ok(())
}

impl HarmonicSchedule {
    pub fn new(harmonics: Vec<Vec<AmplitudeSegment>>) -> Result<Self, SignalError> {
        for (i, segs) in harmonics.iter().enumerate() {
            let what = format!("harmonic #{}", i + 1);
            check_starts(&what, segs.iter().map(|s| s.start))?;
            for s in segs {
                if !(s.amplitude >= 0.0) || !s.amplitude.is_finite() {
                    return Err(SignalError::InvalidSchedule(format!(
                        "{what}: amplitude must be finite and non-negative, got {}",
                        s.amplitude
                    )));
                }
                if !s.phase.is_finite() {
                    return Err(SignalError::InvalidSchedule(format!("{what}: phase must be finite")));
                }
            }
        }
        Ok(Self { harmonics })
    }

    /// Time-invariant amplitudes and phase offsets.
    pub fn constant(amplitudes: &[f64], phases: &[f64]) -> Result<Self, SignalError> {
        if amplitudes.len() != phases.len() {
            return Err(SignalError::InvalidSchedule("amplitude and phase lists differ in length".into()));
        }
        Self::new(
            amplitudes
                .iter()
                .zip(phases)
                .map(|(&amplitude, &phase)| vec![AmplitudeSegment { start: 0.0, amplitude, phase }])
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.harmonics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.harmonics.is_empty()
    }

    pub fn segments(&self, harmonic: usize) -> &[AmplitudeSegment] {
        &self.harmonics[harmonic]
    }

    /// Active segment of harmonic `harmonic` at time `t` (left-closed).
    pub fn segment_at(&self, harmonic: usize, t: f64) -> &AmplitudeSegment {
        let segs = &self.harmonics[harmonic];
        let idx = segs.partition_point(|s| s.start <= t);
        &segs[idx.saturating_sub(1)]
    }

    /// All segment start times after `t = 0`.
    pub fn change_times(&self) -> Vec<f64> {
        self.harmonics.iter().flat_map(|segs| segs.iter().skip(1).map(|s| s.start)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySegment {
    pub start: f64,
    /// Fundamental angular frequency in rad/s.
    pub omega: f64,
}

/// Piecewise-constant fundamental angular frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySchedule {
    segments: Vec<FrequencySegment>,
    // ∫₀^{start_i} ω dτ for each segment
    accumulated: Vec<f64>,
}

impl FrequencySchedule {
    pub fn new(segments: Vec<FrequencySegment>) -> Result<Self, SignalError> {
        check_starts("frequency", segments.iter().map(|s| s.start))?;
        if let Some(bad) = segments.iter().find(|s| !(s.omega > 0.0) || !s.omega.is_finite()) {
            return Err(SignalError::InvalidSchedule(format!(
                "frequency: angular frequency must be positive, got {} at t = {}",
                bad.omega, bad.start
            )));
        }
        let mut accumulated = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for (i, seg) in segments.iter().enumerate() {
            if i > 0 {
                let prev = &segments[i - 1];
                acc += prev.omega * (seg.start - prev.start);
            }
            accumulated.push(acc);
        }
        Ok(Self { segments, accumulated })
    }

    pub fn constant(omega: f64) -> Result<Self, SignalError> {
        Self::new(vec![FrequencySegment { start: 0.0, omega }])
    }

    pub fn segments(&self) -> &[FrequencySegment] {
        &self.segments
    }

    fn index_at(&self, t: f64) -> usize {
        self.segments.partition_point(|s| s.start <= t).saturating_sub(1)
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        self.segments[self.index_at(t)].omega
    }

    /// `∫₀ᵗ ω(τ) dτ`.
    pub fn integral(&self, t: f64) -> Result<f64, SignalError> {
        if !(t >= 0.0) {
            return Err(SignalError::NegativeTime(t));
        }
        let i = self.index_at(t);
        let seg = &self.segments[i];
        Ok(self.accumulated[i] + seg.omega * (t - seg.start))
    }

    pub fn change_times(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }
}

/// Phase `ν ∫₀ᵗ ω dτ + φ₀` of a harmonic of order `order`.
pub fn phase_at(schedule: &FrequencySchedule, order: f64, t: f64, phi0: f64) -> Result<f64, SignalError> {
    Ok(order * schedule.integral(t)? + phi0)
}

/// True internal-model state, blocks `(a_ν cos φ_ν, a_ν sin φ_ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueState {
    pub x: Vec<f64>,
}

impl TrueState {
    pub fn block(&self, i: usize) -> (f64, f64) {
        (self.x[2 * i], self.x[2 * i + 1])
    }

    /// `cᵀx`, the signal value.
    pub fn output(&self) -> f64 {
        self.x.iter().step_by(2).sum()
    }
}

/// Complete signal description: harmonic orders, amplitude and frequency schedules.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModel {
    harmonics: HarmonicSet,
    amplitudes: HarmonicSchedule,
    frequency: FrequencySchedule,
}

impl SignalModel {
    pub fn new(
        harmonics: HarmonicSet,
        amplitudes: HarmonicSchedule,
        frequency: FrequencySchedule,
    ) -> Result<Self, SignalError> {
        if amplitudes.len() != harmonics.len() {
            return Err(SignalError::InvalidSchedule(format!(
                "{} amplitude schedules for {} harmonics",
                amplitudes.len(),
                harmonics.len()
            )));
        }
        Ok(Self { harmonics, amplitudes, frequency })
    }

    pub fn harmonics(&self) -> &HarmonicSet {
        &self.harmonics
    }

    pub fn amplitudes(&self) -> &HarmonicSchedule {
        &self.amplitudes
    }

    pub fn frequency(&self) -> &FrequencySchedule {
        &self.frequency
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        self.frequency.omega_at(t)
    }

    /// Amplitude and phase of harmonic `i` at time `t`.
    pub fn harmonic_polar(&self, i: usize, t: f64) -> Result<(f64, f64), SignalError> {
        let seg = self.amplitudes.segment_at(i, t);
        let phase = phase_at(&self.frequency, self.harmonics.orders()[i], t, seg.phase)?;
        Ok((seg.amplitude, phase))
    }

    /// `y_ν(t)` for harmonic index `i`.
    pub fn harmonic_component(&self, i: usize, t: f64) -> Result<f64, SignalError> {
        let (a, phi) = self.harmonic_polar(i, t)?;
        Ok(a * phi.cos())
    }

    pub fn sample(&self, t: f64) -> Result<f64, SignalError> {
        let mut y = 0.0;
        for i in 0..self.harmonics.len() {
            y += self.harmonic_component(i, t)?;
        }
        Ok(y)
    }

    pub fn true_state(&self, t: f64) -> Result<TrueState, SignalError> {
        let mut x = Vec::with_capacity(self.harmonics.state_dim());
        for i in 0..self.harmonics.len() {
            let (a, phi) = self.harmonic_polar(i, t)?;
            let (s, c) = phi.sin_cos();
            x.push(a * c);
            x.push(a * s);
        }
        Ok(TrueState { x })
    }

    /// Sorted, de-duplicated instants at which any schedule changes.
    pub fn event_times(&self) -> Vec<f64> {
        let mut times = self.amplitudes.change_times();
        times.extend(self.frequency.change_times());
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

/// First-order low-pass filter, bilinear transform pre-warped at the cutoff.
///
/// The discrete magnitude response equals the continuous `1/(1 + s/ω_c)` exactly
/// at DC and at `ω_c`.
#[derive(Debug, Clone)]
pub struct LowPassFilter {
    b: f64,
    a: f64,
    prev_in: f64,
    prev_out: f64,
}

impl LowPassFilter {
    pub fn new(cutoff: f64, h: f64) -> Result<Self, SignalError> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(SignalError::InvalidFilter(format!("cutoff must be positive, got {cutoff}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(SignalError::InvalidFilter(format!("step must be positive, got {h}")));
        }
        if cutoff * h >= std::f64::consts::PI {
            return Err(SignalError::InvalidFilter(format!(
                "cutoff {cutoff} rad/s is at or above the Nyquist frequency for h = {h}"
            )));
        }
        let k = (cutoff * h / 2.0).tan();
        Ok(Self { b: k / (1.0 + k), a: (1.0 - k) / (1.0 + k), prev_in: 0.0, prev_out: 0.0 })
    }

    pub fn filter(&mut self, input: f64) -> f64 {
        let out = self.b * (input + self.prev_in) + self.a * self.prev_out;
        self.prev_in = input;
        self.prev_out = out;
        out
    }

    pub fn reset(&mut self) {
        self.prev_in = 0.0;
        self.prev_out = 0.0;
    }
}

/// Filters a whole sample stream, starting from a zero state.
pub fn lowpass_filter(samples: &[f64], cutoff: f64, h: f64) -> Result<Vec<f64>, SignalError> {
    let mut lpf = LowPassFilter::new(cutoff, h)?;
    Ok(samples.iter().map(|&u| lpf.filter(u)).collect())
}
