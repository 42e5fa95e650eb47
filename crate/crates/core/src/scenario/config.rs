//! Scenario documents (TOML) and built-in presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError, SimSettings};
use crate::fll::{FllConfig, FllParams, FllVariant};
use crate::observer::{ObserverGains, ObserverVariant};
use crate::placement::{place, PoleSpec};
use crate::signal::{
    AmplitudeSegment, FrequencySchedule, FrequencySegment, HarmonicSchedule, HarmonicSet, SignalModel,
};
use crate::Complex64;

/// Default integration step, 0.1 ms.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Default initial frequency estimate when the FLL is active, rad/s.
pub const DEFAULT_OMEGA0: f64 = 200.0;
/// Real part of the default per-order pole pair `−3/2 ± jν`.
pub const DEFAULT_POLE_RE: f64 = -1.5;

/// Serialized form of a scenario. Every field is optional at parse time so that
/// missing entries can be reported by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub harmonics: Vec<HarmonicEntry>,
    #[serde(default)]
    pub frequency: Vec<FrequencyEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observer: Option<ObserverEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fll: Option<FllEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicEntry {
    pub order: f64,
    pub segments: Vec<SegmentEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub start_s: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyEntry {
    pub start_s: f64,
    pub hz: f64,
}

/// `poles` lists complex poles `[re, im]` normalized by `ω̂` (conjugate-closed,
/// `2n` entries); `gains` is the full vector `l`. At most one may be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverEntry {
    pub variant: ObserverVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
}

/// Frequencies in rad/s, rates in rad/s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FllEntry {
    pub variant: FllVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpf_rad_s: Option<f64>,
}

fn field(name: impl Into<String>, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Field { field: name.into(), message: message.to_string() }
}

impl ScenarioFile {
    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        toml::to_string_pretty(self).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    /// Validates the document and resolves poles into gains.
    pub fn resolve(&self) -> Result<Scenario, ScenarioError> {
        if self.harmonics.is_empty() {
            return Err(field("harmonics", "at least one harmonic is required"));
        }
        let orders: Vec<f64> = self.harmonics.iter().map(|h| h.order).collect();
        for (i, o) in orders.iter().enumerate() {
            if let Some(j) = orders[..i].iter().position(|p| p == o) {
                return Err(field(
                    format!("harmonics[{i}].order"),
                    format!("duplicate order {o} (also harmonics[{j}])"),
                ));
            }
        }
        let harmonics = HarmonicSet::new(orders.clone()).map_err(|e| field("harmonics.order", e))?;

        let mut segments = Vec::with_capacity(self.harmonics.len());
        for (i, h) in self.harmonics.iter().enumerate() {
            let segs: Vec<AmplitudeSegment> = h
                .segments
                .iter()
                .map(|s| AmplitudeSegment { start: s.start_s, amplitude: s.amplitude, phase: s.phase_rad })
                .collect();
            HarmonicSchedule::new(vec![segs.clone()]).map_err(|e| field(format!("harmonics[{i}].segments"), e))?;
            segments.push(segs);
        }
        let hsched = HarmonicSchedule::new(segments).map_err(|e| field("harmonics", e))?;

        if self.frequency.is_empty() {
            return Err(field("frequency", "at least one frequency segment is required"));
        }
        let fsched = FrequencySchedule::new(
            self.frequency.iter().map(|f| FrequencySegment { start: f.start_s, omega: 2.0 * PI * f.hz }).collect(),
        )
        .map_err(|e| field("frequency", e))?;
        let signal = SignalModel::new(harmonics.clone(), hsched, fsched).map_err(|e| field("harmonics", e))?;

        let gains = resolve_observer(self.observer.as_ref(), &harmonics)?;

        let fll_entry = self.fll.unwrap_or(FllEntry {
            variant: FllVariant::Off,
            gamma: None,
            epsilon: None,
            omega_min: None,
            omega_max: None,
            rate_min: None,
            rate_max: None,
            omega0: None,
        });
        let base = FllParams::defaults(fll_entry.variant);
        let params = FllParams {
            gamma: fll_entry.gamma.unwrap_or(base.gamma),
            epsilon: fll_entry.epsilon.unwrap_or(base.epsilon),
            omega_min: fll_entry.omega_min.unwrap_or(base.omega_min),
            omega_max: fll_entry.omega_max.unwrap_or(base.omega_max),
            rate_min: fll_entry.rate_min.unwrap_or(base.rate_min),
            rate_max: fll_entry.rate_max.unwrap_or(base.rate_max),
        };
        let fll = FllConfig::new(fll_entry.variant, &gains, params).map_err(|e| field("fll", e))?;
        let omega0 = match fll_entry.variant {
            FllVariant::Off => signal.omega_at(0.0),
            _ => fll_entry.omega0.unwrap_or(DEFAULT_OMEGA0),
        };
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(field("fll.omega0", format!("must be positive, got {omega0}")));
        }

        let sim = self.sim.ok_or_else(|| field("sim", "missing section (needs at least duration_s)"))?;
        let duration = sim.duration_s.ok_or_else(|| field("sim.duration_s", "missing duration"))?;
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(field("sim.duration_s", format!("duration must be positive, got {duration}")));
        }
        let step = sim.step_s.unwrap_or(DEFAULT_STEP);
        if !(step > 0.0) || !step.is_finite() {
            return Err(field("sim.step_s", format!("step must be positive, got {step}")));
        }
        let steps = (duration / step).round();
        if !(steps >= 1.0 && steps < u32::MAX as f64) {
            return Err(field("sim.step_s", format!("duration/step = {} is out of range", duration / step)));
        }
        if ((steps * step - duration) / duration).abs() > 1e-9 {
            return Err(field("sim.step_s", format!("duration {duration} is not a multiple of the step {step}")));
        }
        let log_every = sim.log_every.unwrap_or(1);
        if log_every == 0 {
            return Err(field("sim.log_every", "must be at least 1"));
        }
        let noise_amp = sim.noise_amp.filter(|&a| a != 0.0);
        if let Some(a) = noise_amp {
            if !(a > 0.0) || !a.is_finite() {
                return Err(field("sim.noise_amp", format!("must be non-negative, got {a}")));
            }
        }
        if let Some(c) = sim.lpf_rad_s {
            crate::signal::LowPassFilter::new(c, step).map_err(|e| field("sim.lpf_rad_s", e))?;
        }
        let sim = SimSettings {
            duration,
            step,
            steps: steps as usize,
            log_every,
            seed: sim.seed.unwrap_or(0),
            noise_amp,
            lpf: sim.lpf_rad_s,
        };
        Ok(Scenario { label: self.label.clone().unwrap_or_else(|| "scenario".into()), signal, gains, fll, omega0, sim })
    }
}

fn resolve_observer(entry: Option<&ObserverEntry>, harmonics: &HarmonicSet) -> Result<ObserverGains, ScenarioError> {
    let Some(entry) = entry else {
        return default_gains(ObserverVariant::MSogi, harmonics);
    };
    match (&entry.poles, &entry.gains) {
        (Some(_), Some(_)) => Err(field("observer", "give either poles or gains, not both")),
        (None, Some(l)) => {
            ObserverGains::from_vector(entry.variant, harmonics, l.clone()).map_err(|e| field("observer.gains", e))
        }
        (Some(raw), None) => {
            if entry.variant != ObserverVariant::MSogi {
                return Err(field(
                    "observer.poles",
                    format!("poles can only be placed for msogi, not {}", entry.variant),
                ));
            }
            let poles = PoleSpec::new(raw.iter().map(|p| Complex64::new(p[0], p[1])).collect())
                .map_err(|e| field("observer.poles", e))?;
            let placed = place(harmonics.orders(), &poles).map_err(|e| field("observer.poles", e))?;
            ObserverGains::from_vector(ObserverVariant::MSogi, harmonics, placed.l)
                .map_err(|e| field("observer.poles", e))
        }
        (None, None) => default_gains(entry.variant, harmonics),
    }
}

fn default_gains(variant: ObserverVariant, harmonics: &HarmonicSet) -> Result<ObserverGains, ScenarioError> {
    let gains = match variant {
        ObserverVariant::SSogi => ObserverGains::ssogi(harmonics),
        ObserverVariant::Anf => ObserverGains::anf(harmonics),
        ObserverVariant::MSogi => {
            let poles =
                PoleSpec::per_order(harmonics.orders(), DEFAULT_POLE_RE).map_err(|e| field("observer.poles", e))?;
            let placed = place(harmonics.orders(), &poles).map_err(|e| field("observer.poles", e))?;
            ObserverGains::from_vector(ObserverVariant::MSogi, harmonics, placed.l)
        }
    };
    gains.map_err(|e| field("observer", e))
}

/// Parses and validates a TOML scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.message().to_string()))?;
    file.resolve()
}

/// Fundamental amplitude of the built-in schedules.
pub const PRESET_FUNDAMENTAL: f64 = 325.0;
/// Fractions of the fundamental for harmonics 2–10, rotated by one place at each event.
pub const PRESET_FRACTIONS: [f64; 9] = [0.30, 0.25, 0.20, 0.15, 0.12, 0.10, 0.08, 0.06, 0.05];

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 6] = ["s1-msogi", "s1-ssogi", "s1-anf", "s2-msogi", "s2-ssogi", "s2-anf"];

// Ten-harmonic schedule with amplitude events at `events`. Segment `s` gives
// harmonic ν the fraction `PRESET_FRACTIONS[(ν − 2 + s) mod 9]` and phase `0.7·s·ν`.
fn preset_harmonics(events: &[f64]) -> Vec<HarmonicEntry> {
    let starts: Vec<f64> = std::iter::once(0.0).chain(events.iter().copied()).collect();
    (1..=10)
        .map(|nu| HarmonicEntry {
            order: nu as f64,
            segments: starts
                .iter()
                .enumerate()
                .map(|(s, &start_s)| {
                    let amplitude = if nu == 1 {
                        PRESET_FUNDAMENTAL
                    } else {
                        PRESET_FUNDAMENTAL * PRESET_FRACTIONS[(nu - 2 + s) % 9]
                    };
                    let phase = crate::extraction::wrap_angle(0.7 * s as f64 * nu as f64);
                    SegmentEntry { start_s, amplitude, phase_rad: phase }
                })
                .collect(),
        })
        .collect()
}

/// Built-in scenario documents. The amplitude schedules are stand-ins.
pub fn preset_file(name: &str) -> Result<ScenarioFile, ScenarioError> {
    let (scenario, variant) = name.split_once('-').ok_or_else(|| ScenarioError::UnknownPreset(name.into()))?;
    let variant = match variant {
        "msogi" => ObserverVariant::MSogi,
        "ssogi" => ObserverVariant::SSogi,
        "anf" => ObserverVariant::Anf,
        _ => return Err(ScenarioError::UnknownPreset(name.into())),
    };
    let observer = Some(ObserverEntry { variant, poles: None, gains: None });
    let sim = Some(SimEntry {
        duration_s: Some(0.8),
        step_s: Some(DEFAULT_STEP),
        log_every: Some(1),
        seed: Some(0),
        noise_amp: None,
        lpf_rad_s: None,
    });
    match scenario {
        "s1" => Ok(ScenarioFile {
            label: Some(name.into()),
            harmonics: preset_harmonics(&[0.2, 0.4, 0.6]),
            frequency: vec![FrequencyEntry { start_s: 0.0, hz: 50.0 }],
            observer,
            fll: None,
            sim,
        }),
        "s2" => {
            let fll_variant = match variant {
                ObserverVariant::MSogi => FllVariant::Modified,
                ObserverVariant::SSogi => FllVariant::NormalizedStandard,
                ObserverVariant::Anf => FllVariant::PlainStandard,
            };
            let p = FllParams::defaults(fll_variant).with_bounds_hz(39.0, 61.0);
            Ok(ScenarioFile {
                label: Some(name.into()),
                harmonics: preset_harmonics(&[0.4, 0.6]),
                frequency: vec![
                    FrequencyEntry { start_s: 0.0, hz: 50.0 },
                    FrequencyEntry { start_s: 0.2, hz: 60.0 },
                    FrequencyEntry { start_s: 0.6, hz: 40.0 },
                ],
                observer,
                fll: Some(FllEntry {
                    variant: fll_variant,
                    gamma: Some(p.gamma),
                    epsilon: Some(p.epsilon),
                    omega_min: Some(p.omega_min),
                    omega_max: Some(p.omega_max),
                    rate_min: Some(p.rate_min),
                    rate_max: Some(p.rate_max),
                    omega0: Some(DEFAULT_OMEGA0),
                }),
                sim,
            })
        }
        _ => Err(ScenarioError::UnknownPreset(name.into())),
    }
}

pub fn preset(name: &str) -> Result<Scenario, ScenarioError> {
    preset_file(name)?.resolve()
}
