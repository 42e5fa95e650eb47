//! Frequency-locked loops driving the observer's `ω̂`.
//!
//! Every variant adapts with `λᵀx̂ · e_y`, where `λ = blockdiag(J̄⁻¹, 0, …) l`.
//! The modified loop adds gain normalization, an anti-windup gate that only
//! blocks motion away from `[ω_min, ω_max]`, and a rate limit.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::observer::ObserverGains;

#[derive(Debug, Error, PartialEq)]
pub enum FllError {
    #[error("invalid FLL configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FllVariant {
    /// No adaption; the harness feeds the true frequency.
    #[serde(rename = "off")]
    Off,
    /// Gain-normalized standard FLL without gate or saturation.
    #[serde(rename = "sfll-gn")]
    NormalizedStandard,
    /// Standard FLL with a constant gain `γ`.
    #[serde(rename = "sfll-plain")]
    PlainStandard,
    /// Normalized FLL with anti-windup and rate limitation.
    #[serde(rename = "mfll")]
    Modified,
}

impl fmt::Display for FllVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Off => "off",
            Self::NormalizedStandard => "sFLL-GN",
            Self::PlainStandard => "sFLL",
            Self::Modified => "mFLL",
        })
    }
}

/// Tuning parameters. `gamma` is `Γ` for the normalized variants and `γ` for the plain one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FllParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub rate_min: f64,
    pub rate_max: f64,
}

impl FllParams {
    /// Default tuning. The interval bounds are 39 and 61 rad/s as given, not scaled by 2π.
    pub fn defaults(variant: FllVariant) -> Self {
        let rate = 2.0 * PI * 10e3;
        let gamma = match variant {
            FllVariant::Modified | FllVariant::Off => 60.0,
            FllVariant::NormalizedStandard => 46.0,
            FllVariant::PlainStandard => 0.5,
        };
        Self { gamma, epsilon: 0.1, omega_min: 39.0, omega_max: 61.0, rate_min: -rate, rate_max: rate }
    }

    /// Bounds `2π·f_min … 2π·f_max`.
    pub fn with_bounds_hz(mut self, f_min: f64, f_max: f64) -> Self {
        self.omega_min = 2.0 * PI * f_min;
        self.omega_max = 2.0 * PI * f_max;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FllConfig {
    pub variant: FllVariant,
    pub params: FllParams,
    pub lambda: Vec<f64>,
}

impl FllConfig {
    pub fn new(variant: FllVariant, gains: &ObserverGains, params: FllParams) -> Result<Self, FllError> {
        let lambda = lambda_vector(gains);
        if variant != FllVariant::Off {
            let p = &params;
            let bad = |msg: String| Err(FllError::InvalidConfig(msg));
            if !(p.gamma > 0.0) {
                return bad(format!("gain must be positive, got {}", p.gamma));
            }
            if !(p.epsilon > 0.0) {
                return bad(format!("epsilon must be positive, got {}", p.epsilon));
            }
            if !(p.omega_min > 0.0 && p.omega_min < p.omega_max) {
                return bad(format!("need 0 < omega_min < omega_max, got {} and {}", p.omega_min, p.omega_max));
            }
            if !(p.rate_min < 0.0 && p.rate_max > 0.0) {
                return bad(format!("need rate_min < 0 < rate_max, got {} and {}", p.rate_min, p.rate_max));
            }
            let s = sign_product(gains.l(), &lambda);
            if !(s > 0.0) {
                return bad(format!("l'J1 lambda = {s} must be positive"));
            }
        }
        Ok(Self { variant, params, lambda })
    }

    pub fn with_defaults(variant: FllVariant, gains: &ObserverGains) -> Result<Self, FllError> {
        Self::new(variant, gains, FllParams::defaults(variant))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FllState {
    pub omega_hat: f64,
    /// Last unsaturated adaption rate `δ`.
    pub delta: f64,
}

impl FllState {
    pub fn new(omega_hat: f64) -> Self {
        Self { omega_hat, delta: 0.0 }
    }
}

/// `λ = (g₁, −k₁, 0, …, 0)`.
pub fn lambda_vector(gains: &ObserverGains) -> Vec<f64> {
    let mut lambda = vec![0.0; gains.l().len()];
    lambda[0] = gains.g(0);
    lambda[1] = -gains.k(0);
    lambda
}

/// `lᵀ J_1 λ` with `J_1 = blockdiag(ν_1 J̄, 0, …)`, `ν_1 = 1`.
pub fn sign_product(l: &[f64], lambda: &[f64]) -> f64 {
    // J̄ (λ₀, λ₁) = (−λ₁, λ₀)
    l[0] * -lambda[1] + l[1] * lambda[0]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `δ = Γ ω̂ e_y λᵀx̂ / max(‖x̂₁‖², ε)`.
pub fn normalized_delta(config: &FllConfig, state: &FllState, e_y: f64, x: &[f64]) -> f64 {
    let norm1 = x[0] * x[0] + x[1] * x[1];
    config.params.gamma * state.omega_hat * e_y * dot(&config.lambda, x) / norm1.max(config.params.epsilon)
}

/// 0 when `ω̂` sits at or beyond a bound and `δ` points further out, else 1.
pub fn anti_windup_gate(omega_hat: f64, delta: f64, config: &FllConfig) -> f64 {
    let p = &config.params;
    if (omega_hat >= p.omega_max && delta >= 0.0) || (omega_hat <= p.omega_min && delta <= 0.0) {
        0.0
    } else {
        1.0
    }
}

pub fn rate_limit(delta: f64, config: &FllConfig) -> f64 {
    delta.clamp(config.params.rate_min, config.params.rate_max)
}

/// One explicit Euler step of the adaption law.
pub fn fll_step(config: &FllConfig, state: &FllState, e_y: f64, x: &[f64], h: f64) -> FllState {
    match config.variant {
        FllVariant::Off => FllState { omega_hat: state.omega_hat, delta: 0.0 },
        FllVariant::NormalizedStandard => {
            let delta = normalized_delta(config, state, e_y, x);
            FllState { omega_hat: state.omega_hat + h * delta, delta }
        }
        FllVariant::PlainStandard => {
            let delta = config.params.gamma * dot(&config.lambda, x) * e_y;
            FllState { omega_hat: state.omega_hat + h * delta, delta }
        }
        FllVariant::Modified => {
            let delta = normalized_delta(config, state, e_y, x);
            let rate = anti_windup_gate(state.omega_hat, delta, config) * rate_limit(delta, config);
            let (w, p) = (state.omega_hat, &config.params);
            let mut next = w + h * rate;
            // an Euler step must not jump across a bound it was approaching
            if w < p.omega_max && next > p.omega_max {
                next = p.omega_max;
            } else if w > p.omega_min && next < p.omega_min {
                next = p.omega_min;
            }
            FllState { omega_hat: next, delta }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::HarmonicSet;
    use proptest::prelude::*;

    fn gains_ssogi(n: usize) -> ObserverGains {
        ObserverGains::ssogi(&HarmonicSet::integer(n).unwrap()).unwrap()
    }

    fn mfll(lo: f64, hi: f64) -> FllConfig {
        let params = FllParams { omega_min: lo, omega_max: hi, ..FllParams::defaults(FllVariant::Modified) };
        FllConfig::new(FllVariant::Modified, &gains_ssogi(2), params).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let l = lambda_vector(&gains_ssogi(3));
        assert_eq!(l.len(), 6);
        assert!(l[0] == 0.0 && (l[1] + std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(l[2..].iter().all(|&v| v == 0.0));

        let h = HarmonicSet::integer(1).unwrap();
        let g = ObserverGains::msogi(&h, &[3.0], &[-9.0 / 4.0]).unwrap();
        assert_eq!(lambda_vector(&g), vec![-9.0 / 4.0, -3.0]);
        assert_eq!(sign_product(g.l(), &lambda_vector(&g)), 9.0 + 81.0 / 16.0);
    }

    #[test]
    fn delta_examples() {
        let cfg = mfll(2.0 * PI * 39.0, 2.0 * PI * 61.0);
        let s = FllState::new(100.0);
        assert_eq!(normalized_delta(&cfg, &s, 0.0, &[1.0, 2.0, 0.0, 0.0]), 0.0);
        assert_eq!(normalized_delta(&cfg, &s, 1.0, &[0.0; 4]), 0.0);
        // λ = (0, −√2): pick x̂ with λᵀx̂ = 0.05 and ‖x̂₁‖ = 1
        let xb = -0.05 / std::f64::consts::SQRT_2;
        let xa = (1.0 - xb * xb).sqrt();
        let d = normalized_delta(&cfg, &s, 0.1, &[xa, xb, 0.0, 0.0]);
        assert!((d - 30.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn gate_and_saturation() {
        let cfg = mfll(10.0, 20.0);
        assert_eq!(anti_windup_gate(21.0, 5.0, &cfg), 0.0);
        assert_eq!(anti_windup_gate(21.0, -5.0, &cfg), 1.0);
        assert_eq!(anti_windup_gate(9.0, -5.0, &cfg), 0.0);
        assert_eq!(anti_windup_gate(9.0, 5.0, &cfg), 1.0);
        assert_eq!(anti_windup_gate(15.0, 1e9, &cfg), 1.0);
        let max = cfg.params.rate_max;
        assert_eq!(rate_limit(0.0, &cfg), 0.0);
        assert_eq!(rate_limit(2.0 * max, &cfg), max);
        assert_eq!(rate_limit(cfg.params.rate_min - 1.0, &cfg), cfg.params.rate_min);
    }

    #[test]
    fn step_examples() {
        let cfg = mfll(10.0, 20.0);
        let mut s = FllState::new(15.0);
        for _ in 0..100 {
            s = fll_step(&cfg, &s, 0.0, &[1.0, 1.0, 0.0, 0.0], 1e-4);
        }
        assert_eq!(s.omega_hat, 15.0);

        // λᵀx̂ e_y > 0 drives ω̂ up
        let x = [0.0, -1.0, 0.0, 0.0];
        let mut s = FllState::new(20.0);
        for _ in 0..1000 {
            s = fll_step(&cfg, &s, 1.0, &x, 1e-4);
            assert_eq!(s.omega_hat, 20.0);
        }
        let mut s = FllState::new(5.0);
        let s1 = fll_step(&cfg, &s, 1.0, &x, 1e-4);
        assert!(s1.omega_hat > 5.0);
        s = s1;
        for _ in 0..10 {
            let next = fll_step(&cfg, &s, 1.0, &x, 1e-4);
            assert!(next.omega_hat > s.omega_hat);
            s = next;
        }
    }

    #[test]
    fn config_validation() {
        let g = gains_ssogi(1);
        let mut p = FllParams::defaults(FllVariant::Modified);
        p.gamma = 0.0;
        assert!(FllConfig::new(FllVariant::Modified, &g, p).is_err());
        let mut p = FllParams::defaults(FllVariant::Modified);
        p.omega_min = 70.0;
        assert!(FllConfig::new(FllVariant::Modified, &g, p).is_err());
        let mut p = FllParams::defaults(FllVariant::Modified);
        p.rate_min = 1.0;
        assert!(FllConfig::new(FllVariant::Modified, &g, p).is_err());
        assert!(FllConfig::with_defaults(FllVariant::PlainStandard, &g).is_ok());
    }

    proptest! {
        #[test]
        fn sign_product_is_k2_plus_g2(k in 0.1f64..10.0, g in -5.0f64..5.0) {
            let h = HarmonicSet::integer(1).unwrap();
            prop_assume!(1.0 - g > 0.0);
            let gains = ObserverGains::msogi(&h, &[k], &[g]).unwrap();
            let s = sign_product(gains.l(), &lambda_vector(&gains));
            prop_assert!((s - (k * k + g * g)).abs() < 1e-12 * (k * k + g * g));
        }

        #[test]
        fn mfll_stays_bounded_and_rate_limited(
            w0 in 100.0f64..500.0,
            inputs in proptest::collection::vec((-400.0f64..400.0, -400.0f64..400.0, -400.0f64..400.0), 1..400),
        ) {
            let cfg = mfll(2.0 * PI * 39.0, 2.0 * PI * 61.0);
            let (lo, hi) = (w0.min(cfg.params.omega_min), w0.max(cfg.params.omega_max));
            let h = 1e-4;
            let mut s = FllState::new(w0);
            // repeat the random trace to reach ~1 s
            for rep in 0..(10_000 / inputs.len()).max(1) {
                for &(e, a, b) in &inputs {
                    let next = fll_step(&cfg, &s, e, &[a, b, 0.0, 0.0], h);
                    prop_assert!(next.omega_hat >= lo - 1e-9 && next.omega_hat <= hi + 1e-9, "rep {rep}: {}", next.omega_hat);
                    prop_assert!((next.omega_hat - s.omega_hat).abs() / h <= cfg.params.rate_max * (1.0 + 1e-12));
                    s = next;
                }
            }
        }
    }
}
