//! Amplitude and phase extraction and run metrics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExtractionError {
    #[error("arctan2 is undefined at (0, 0)")]
    UndefinedAngle,
    #[error("empty trace")]
    EmptyTrace,
    #[error("trace columns differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Two-argument arctangent with range `(−π, π]`. The first argument is the
/// cosine-like component, the second the sine-like one.
pub fn arctan2(x: f64, y: f64) -> Result<f64, ExtractionError> {
    if x > 0.0 {
        Ok((y / x).atan())
    } else if x < 0.0 {
        if y > 0.0 {
            Ok((y / x).atan() + PI)
        } else if y < 0.0 {
            Ok((y / x).atan() - PI)
        } else {
            Ok(PI)
        }
    } else if y > 0.0 {
        Ok(PI / 2.0)
    } else if y < 0.0 {
        Ok(-PI / 2.0)
    } else {
        Err(ExtractionError::UndefinedAngle)
    }
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEstimate {
    pub order: f64,
    pub amplitude: f64,
    /// `None` for a zero block.
    pub phase: Option<f64>,
    pub y: f64,
    pub q: f64,
}

/// `â_ν = ‖(ŷ_ν, q̂_ν)‖`, `φ̂_ν = arctan2(ŷ_ν, q̂_ν)` for each block.
pub fn extract(x: &[f64], orders: &[f64]) -> Vec<HarmonicEstimate> {
    orders
        .iter()
        .enumerate()
        .map(|(i, &order)| {
            let (y, q) = (x[2 * i], x[2 * i + 1]);
            HarmonicEstimate { order, amplitude: y.hypot(q), phase: arctan2(y, q).ok(), y, q }
        })
        .collect()
}

/// Earliest sample time in `[t0, t_end)` after which `|e| ≤ threshold` holds
/// through the last sample of the window. `Ok(None)` if the last sample violates.
pub fn settling_time(
    times: &[f64],
    errors: &[f64],
    t0: f64,
    t_end: f64,
    threshold: f64,
) -> Result<Option<f64>, ExtractionError> {
    if times.len() != errors.len() {
        return Err(ExtractionError::LengthMismatch(times.len(), errors.len()));
    }
    let lo = times.partition_point(|&t| t < t0);
    let hi = times.partition_point(|&t| t < t_end);
    if lo >= hi {
        return Err(ExtractionError::EmptyTrace);
    }
    match (lo..hi).rev().find(|&k| !(errors[k].abs() <= threshold)) {
        None => Ok(Some(t0)),
        Some(k) if k + 1 < hi => Ok(Some(times[k + 1])),
        Some(_) => Ok(None),
    }
}

/// Metrics of one event window `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMetrics {
    pub start: f64,
    pub end: f64,
    /// Settling band `ε_y`, 2 % of the fundamental amplitude in this window.
    pub threshold: f64,
    /// Settling time of `e_y`, relative to `start`.
    pub settling_time: Option<f64>,
    /// Settling time of each `e_ν` against the same band, relative to `start`.
    pub harmonic_settling: Vec<Option<f64>>,
    /// `|â_ν − a_ν|` at the last sample of the window.
    pub amplitude_errors: Vec<f64>,
    /// Wrapped `φ̂_ν − φ_ν` at the last sample of the window.
    pub phase_errors: Vec<Option<f64>>,
    /// Time after which `|ω̂ − ω| ≤ 1 % ω`, relative to `start`.
    pub frequency_settling: Option<f64>,
    /// `(ω̂ − ω)/ω` at the last sample of the window.
    pub final_frequency_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub label: String,
    pub events: Vec<EventMetrics>,
    /// Set when the run stopped early.
    pub failure: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arctan2_table() {
        assert_eq!(arctan2(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(arctan2(0.0, 1.0).unwrap(), PI / 2.0);
        assert_eq!(arctan2(0.0, -1.0).unwrap(), -PI / 2.0);
        assert_eq!(arctan2(-1.0, 0.0).unwrap(), PI);
        assert!((arctan2(1.0, 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((arctan2(-1.0, 1.0).unwrap() - 3.0 * PI / 4.0).abs() < 1e-15);
        assert!((arctan2(-1.0, -1.0).unwrap() + 3.0 * PI / 4.0).abs() < 1e-15);
        assert_eq!(arctan2(0.0, 0.0), Err(ExtractionError::UndefinedAngle));
    }

    #[test]
    fn extract_examples() {
        let e = extract(&[3.0, 4.0, 1.0, 0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]);
        assert_eq!(e[0].amplitude, 5.0);
        assert!((e[0].phase.unwrap() - (4.0f64 / 3.0).atan()).abs() < 1e-15);
        assert_eq!((e[1].amplitude, e[1].phase), (1.0, Some(0.0)));
        assert_eq!((e[2].amplitude, e[2].phase), (0.0, None));
    }

    #[test]
    fn settling_examples() {
        let h = 1e-3;
        let times: Vec<f64> = (0..5000).map(|k| 1.0 + k as f64 * h).collect();
        let zeros = vec![0.0; times.len()];
        assert_eq!(settling_time(&times, &zeros, 1.0, f64::INFINITY, 0.1).unwrap(), Some(1.0));

        let decay: Vec<f64> = times.iter().map(|t| (-(t - 1.0)).exp()).collect();
        let ts = settling_time(&times, &decay, 1.0, f64::INFINITY, (-2.0f64).exp()).unwrap().unwrap();
        assert!((ts - 3.0).abs() <= h, "{ts}");

        let mut late = zeros.clone();
        *late.last_mut().unwrap() = 1.0;
        assert_eq!(settling_time(&times, &late, 1.0, f64::INFINITY, 0.1).unwrap(), None);

        assert_eq!(settling_time(&[], &[], 0.0, 1.0, 0.1), Err(ExtractionError::EmptyTrace));
        // a later window ignores earlier violations
        let mut early = zeros.clone();
        early[0] = 5.0;
        assert_eq!(settling_time(&times, &early, 2.0, 3.0, 0.1).unwrap(), Some(2.0));
    }

    proptest! {
        #[test]
        fn arctan2_agrees_with_std(x in -10.0f64..10.0, y in -10.0f64..10.0) {
            prop_assume!(x != 0.0 || y != 0.0);
            let a = arctan2(x, y).unwrap();
            prop_assert!(a > -PI && a <= PI);
            prop_assert!(wrap_angle(a - y.atan2(x)).abs() < 1e-12);
        }

        #[test]
        fn extraction_recovers_polar(a in 0.01f64..100.0, phi in -PI..PI) {
            let est = extract(&[a * phi.cos(), a * phi.sin()], &[1.0]);
            prop_assert!((est[0].amplitude - a).abs() <= 1e-12 * a);
            prop_assert!(wrap_angle(est[0].phase.unwrap() - phi).abs() < 1e-12);
        }

        #[test]
        fn amplitude_is_rotation_invariant(ya in -5.0f64..5.0, qa in -5.0f64..5.0, theta in -PI..PI) {
            let (s, c) = theta.sin_cos();
            let a = extract(&[ya, qa], &[1.0])[0].amplitude;
            let b = extract(&[c * ya - s * qa, s * ya + c * qa], &[1.0])[0].amplitude;
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn wrap_range(a in -1e4f64..1e4) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!(((a - w) / (2.0 * PI)).fract().abs() < 1e-9 || (1.0 - ((a - w) / (2.0 * PI)).fract().abs()) < 1e-9);
        }
    }
}
