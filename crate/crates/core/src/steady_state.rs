//! Closed-form quasi-steady-state responses of the observer at a held `ω̂`.
//!
//! For an input `cos(ω t)` the observer's transfer functions share the
//! denominator `ζ(ω) + j ξ(ω)`:
//!
//! * `Y_i = (j k_i ν_i ω̂ ω − g_i ν_i² ω̂²) P_i / (ζ + jξ)`
//! * `Q_i = (j g_i ν_i ω̂ ω + k_i ν_i² ω̂²) P_i / (ζ + jξ)`
//! * `E_y = Π_k (ν_k² ω̂² − ω²) / (ζ + jξ)`
//!
//! with `P_i = Π_{k≠i} (ν_k² ω̂² − ω²)`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::extraction::arctan2;
use crate::observer::ObserverGains;
use crate::Complex64;

#[derive(Debug, Error, PartialEq)]
pub enum ResponseError {
    #[error("response denominator vanishes at ω = {omega} rad/s (ω̂ = {omega_hat} rad/s)")]
    Singular { omega_hat: f64, omega: f64 },
    #[error("frequencies must be positive (ω̂ = {omega_hat}, ω = {omega})")]
    NonPositiveFrequency { omega_hat: f64, omega: f64 },
    #[error("harmonic index {index} out of range for {n} harmonics")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Amplitude and phase responses of harmonic `index` at probe frequency `omega`.
/// Phases are `None` where the amplitude is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseSet {
    pub index: usize,
    pub omega: f64,
    pub a_y: f64,
    pub phi_y: Option<f64>,
    pub a_q: f64,
    pub phi_q: Option<f64>,
    pub a_e: f64,
    pub phi_e: Option<f64>,
}

fn product_except(gains: &ObserverGains, omega_hat: f64, omega: f64, skip: Option<usize>) -> f64 {
    gains
        .orders()
        .iter()
        .enumerate()
        .filter(|&(k, _)| Some(k) != skip)
        .map(|(_, nu)| nu * nu * omega_hat * omega_hat - omega * omega)
        .product()
}

/// `(ξ(ω), ζ(ω))`.
pub fn xi_zeta(gains: &ObserverGains, omega_hat: f64, omega: f64) -> (f64, f64) {
    let mut xi = 0.0;
    let mut zeta = product_except(gains, omega_hat, omega, None);
    for (k, &nu) in gains.orders().iter().enumerate() {
        let p = product_except(gains, omega_hat, omega, Some(k));
        xi += gains.k(k) * nu * omega_hat * omega * p;
        zeta -= gains.g(k) * nu * nu * omega_hat * omega_hat * p;
    }
    (xi, zeta)
}

fn check(gains: &ObserverGains, omega_hat: f64, omega: f64, index: usize) -> Result<(), ResponseError> {
    if !(omega_hat > 0.0 && omega > 0.0) {
        return Err(ResponseError::NonPositiveFrequency { omega_hat, omega });
    }
    if index >= gains.n() {
        return Err(ResponseError::IndexOutOfRange { index, n: gains.n() });
    }
    Ok(())
}

/// The six closed-form amplitude/phase responses.
pub fn responses(
    gains: &ObserverGains,
    omega_hat: f64,
    omega: f64,
    index: usize,
) -> Result<ResponseSet, ResponseError> {
    check(gains, omega_hat, omega, index)?;
    let (xi, zeta) = xi_zeta(gains, omega_hat, omega);
    let den = (zeta * zeta + xi * xi).sqrt();
    if !(den > 0.0) {
        return Err(ResponseError::Singular { omega_hat, omega });
    }
    let nu = gains.orders()[index];
    let (k, g) = (gains.k(index), gains.g(index));
    let p = product_except(gains, omega_hat, omega, Some(index));
    let p0 = product_except(gains, omega_hat, omega, None);
    let scale = nu * omega_hat * p.abs() / den;
    let (w, wh) = (omega, omega_hat);

    let a_y = scale * (k * k * w * w + g * g * nu * nu * wh * wh).sqrt();
    let phi_y = arctan2(p * (k * w * xi - g * nu * wh * zeta), p * (k * w * zeta + g * nu * wh * xi)).ok();
    let a_q = scale * (g * g * w * w + k * k * nu * nu * wh * wh).sqrt();
    let phi_q = arctan2(p * (g * w * xi + k * nu * wh * zeta), p * (g * w * zeta - k * nu * wh * xi)).ok();
    let a_e = p0.abs() / den;
    let phi_e = arctan2(p0 * zeta, -p0 * xi).ok();

    Ok(ResponseSet { index, omega, a_y, phi_y, a_q, phi_q, a_e, phi_e })
}

/// Complex transfer functions `(Y_i, Q_i, E_y)` at `s = jω`.
pub fn transfer_functions(
    gains: &ObserverGains,
    omega_hat: f64,
    omega: f64,
    index: usize,
) -> Result<(Complex64, Complex64, Complex64), ResponseError> {
    check(gains, omega_hat, omega, index)?;
    let (xi, zeta) = xi_zeta(gains, omega_hat, omega);
    let den = Complex64::new(zeta, xi);
    if den.norm_sqr() == 0.0 {
        return Err(ResponseError::Singular { omega_hat, omega });
    }
    let nu = gains.orders()[index];
    let (k, g) = (gains.k(index), gains.g(index));
    let p = product_except(gains, omega_hat, omega, Some(index));
    let p0 = product_except(gains, omega_hat, omega, None);
    let y = Complex64::new(-g * nu * nu * omega_hat * omega_hat, k * nu * omega_hat * omega) * p / den;
    let q = Complex64::new(k * nu * nu * omega_hat * omega_hat, g * nu * omega_hat * omega) * p / den;
    Ok((y, q, Complex64::new(p0, 0.0) / den))
}

/// `lᵀ J_i λ` with `J_i` holding `J̄` in block `i` only.
pub fn block_sign_product(l: &[f64], lambda: &[f64], index: usize) -> f64 {
    let (la, lb) = (l[2 * index], l[2 * index + 1]);
    let (ya, yb) = (lambda[2 * index], lambda[2 * index + 1]);
    -la * yb + lb * ya
}

/// Closed-form `∫ e_y λᵀx̂ dτ` over one period `2π/(ν_i ω)` for the input
/// `amplitude · cos(ν_i ω t)`, observer at held `ω̂`.
pub fn one_period_integral(
    gains: &ObserverGains,
    lambda: &[f64],
    omega_hat: f64,
    omega: f64,
    index: usize,
    amplitude: f64,
) -> Result<f64, ResponseError> {
    check(gains, omega_hat, omega, index)?;
    let nu = gains.orders()[index];
    let x = nu * omega;
    let (xi, zeta) = xi_zeta(gains, omega_hat, x);
    let den = zeta * zeta + xi * xi;
    if !(den > 0.0) {
        return Err(ResponseError::Singular { omega_hat, omega: x });
    }
    let p = product_except(gains, omega_hat, x, Some(index));
    Ok(amplitude * amplitude * PI * nu * nu * omega_hat * omega_hat * p * p * (omega * omega - omega_hat * omega_hat)
        / (omega * den)
        * block_sign_product(gains.l(), lambda, index))
}

/// Sign of [`one_period_integral`] (−1, 0 or +1).
pub fn one_period_integral_sign(
    gains: &ObserverGains,
    lambda: &[f64],
    omega_hat: f64,
    omega: f64,
    index: usize,
) -> Result<i8, ResponseError> {
    let v = one_period_integral(gains, lambda, omega_hat, omega, index, 1.0)?;
    Ok(if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    })
}
