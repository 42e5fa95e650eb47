//! Parallel SOGI observer `dx̂/dt = ω̂ (J − l cᵀ) x̂ + ω̂ l y`.
//!
//! The state stacks one block `(ŷ_ν, q̂_ν)` per harmonic. The gain vector `l`
//! carries blocks `(ν k_ν, ν g_ν)`. With `g_ν = 0` the observer is the
//! standard SOGI bank; `l = c` gives the adaptive notch filter.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::HarmonicSet;
use crate::Complex64;

/// Entries above this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Error, PartialEq)]
pub enum ObserverError {
    #[error("estimated frequency must be positive, got {omega_hat} rad/s at t = {t} s")]
    NonPositiveFrequency { omega_hat: f64, t: f64 },
    #[error("observer diverged at t = {t} s (largest state entry {max_abs:e})")]
    Divergence { t: f64, max_abs: f64 },
    #[error("integration step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gains do not give a Hurwitz matrix (largest real part {max_real:e})")]
    NotHurwitz { max_real: f64 },
    #[error("invalid gains: {0}")]
    InvalidGains(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObserverVariant {
    #[serde(rename = "ssogi")]
    SSogi,
    #[serde(rename = "msogi")]
    MSogi,
    Anf,
}

impl fmt::Display for ObserverVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SSogi => "sSOGI",
            Self::MSogi => "mSOGI",
            Self::Anf => "ANF",
        })
    }
}

/// Gain vector `l` together with the harmonic orders it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    variant: ObserverVariant,
    orders: Vec<f64>,
    l: Vec<f64>,
}

impl ObserverGains {
    /// Validates the variant's structure and that `J − l cᵀ` is Hurwitz.
    pub fn from_vector(variant: ObserverVariant, harmonics: &HarmonicSet, l: Vec<f64>) -> Result<Self, ObserverError> {
        let dim = harmonics.state_dim();
        if l.len() != dim {
            return Err(ObserverError::DimensionMismatch { expected: dim, got: l.len() });
        }
        if let Some(v) = l.iter().find(|v| !v.is_finite()) {
            return Err(ObserverError::InvalidGains(format!("non-finite gain entry {v}")));
        }
        match variant {
            ObserverVariant::SSogi => {
                if let Some(i) = (0..harmonics.len()).find(|&i| l[2 * i + 1] != 0.0) {
                    return Err(ObserverError::InvalidGains(format!(
                        "sSOGI requires g = 0, harmonic #{} has l_β = {}",
                        i + 1,
                        l[2 * i + 1]
                    )));
                }
            }
            ObserverVariant::Anf => {
                let c = output_vector(harmonics.len());
                if l != c {
                    return Err(ObserverError::InvalidGains("ANF requires l = c".into()));
                }
            }
            ObserverVariant::MSogi => {}
        }
        let max_real =
            closed_loop_eigenvalues(harmonics.orders(), &l).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if !(max_real < 0.0) {
            return Err(ObserverError::NotHurwitz { max_real });
        }
        Ok(Self { variant, orders: harmonics.orders().to_vec(), l })
    }

    /// Skips all validation, including the Hurwitz check.
    #[cfg(test)]
    pub(crate) fn unchecked(variant: ObserverVariant, orders: &[f64], l: Vec<f64>) -> Self {
        Self { variant, orders: orders.to_vec(), l }
    }

    /// Standard SOGI bank with `l = √2 c`, i.e. `k_ν = √2/ν`.
    pub fn ssogi(harmonics: &HarmonicSet) -> Result<Self, ObserverError> {
        Self::ssogi_scaled(harmonics, std::f64::consts::SQRT_2)
    }

    /// Standard SOGI bank with `l = scale · c`.
    pub fn ssogi_scaled(harmonics: &HarmonicSet, scale: f64) -> Result<Self, ObserverError> {
        let l = output_vector(harmonics.len()).into_iter().map(|v| v * scale).collect();
        Self::from_vector(ObserverVariant::SSogi, harmonics, l)
    }

    /// Standard SOGI bank with per-harmonic gains `k_ν`.
    pub fn ssogi_with_k(harmonics: &HarmonicSet, k: &[f64]) -> Result<Self, ObserverError> {
        let g = vec![0.0; k.len()];
        let l = stack(harmonics, k, &g)?;
        Self::from_vector(ObserverVariant::SSogi, harmonics, l)
    }

    /// Adaptive notch filter, `l = c`.
    pub fn anf(harmonics: &HarmonicSet) -> Result<Self, ObserverError> {
        Self::from_vector(ObserverVariant::Anf, harmonics, output_vector(harmonics.len()))
    }

    /// Modified SOGI bank with per-harmonic `(k_ν, g_ν)`.
    pub fn msogi(harmonics: &HarmonicSet, k: &[f64], g: &[f64]) -> Result<Self, ObserverError> {
        let l = stack(harmonics, k, g)?;
        Self::from_vector(ObserverVariant::MSogi, harmonics, l)
    }

    pub fn variant(&self) -> ObserverVariant {
        self.variant
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn n(&self) -> usize {
        self.orders.len()
    }

    pub fn l(&self) -> &[f64] {
        &self.l
    }

    /// `k_ν` of harmonic index `i`.
    pub fn k(&self, i: usize) -> f64 {
        self.l[2 * i] / self.orders[i]
    }

    /// `g_ν` of harmonic index `i`.
    pub fn g(&self, i: usize) -> f64 {
        self.l[2 * i + 1] / self.orders[i]
    }

    pub fn system_matrices(&self) -> SystemMatrices {
        SystemMatrices::new(&self.orders, &self.l)
    }
}

fn stack(harmonics: &HarmonicSet, k: &[f64], g: &[f64]) -> Result<Vec<f64>, ObserverError> {
    let n = harmonics.len();
    if k.len() != n || g.len() != n {
        return Err(ObserverError::DimensionMismatch { expected: n, got: k.len().max(g.len()) });
    }
    Ok(harmonics.orders().iter().zip(k.iter().zip(g)).flat_map(|(&nu, (&k, &g))| [nu * k, nu * g]).collect())
}

/// `c = (1, 0, 1, 0, …)`.
pub fn output_vector(n: usize) -> Vec<f64> {
    (0..2 * n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect()
}

/// `J`, `c` and `A = J − l cᵀ` as dense matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub j: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
}

impl SystemMatrices {
    pub fn new(orders: &[f64], l: &[f64]) -> Self {
        let j = internal_model(orders);
        let c = DVector::from_vec(output_vector(orders.len()));
        let lv = DVector::from_column_slice(l);
        let a = &j - &lv * c.transpose();
        Self { j, c, a }
    }
}

/// `J = blockdiag(ν_i J̄)` with `J̄ = [[0, −1], [1, 0]]`.
pub fn internal_model(orders: &[f64]) -> DMatrix<f64> {
    let dim = 2 * orders.len();
    let mut j = DMatrix::zeros(dim, dim);
    for (i, &nu) in orders.iter().enumerate() {
        j[(2 * i, 2 * i + 1)] = -nu;
        j[(2 * i + 1, 2 * i)] = nu;
    }
    j
}

/// Eigenvalues of `J − l cᵀ` (normalized, i.e. for `ω̂ = 1`).
pub fn closed_loop_eigenvalues(orders: &[f64], l: &[f64]) -> Vec<Complex64> {
    SystemMatrices::new(orders, l).a.complex_eigenvalues().iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub x: Vec<f64>,
    pub t: f64,
}

impl ObserverState {
    pub fn zeros(n: usize) -> Self {
        Self { x: vec![0.0; 2 * n], t: 0.0 }
    }

    pub fn block(&self, i: usize) -> (f64, f64) {
        (self.x[2 * i], self.x[2 * i + 1])
    }
}

/// Input samples seen by the RK4 stages at `t`, `t + h/2` and `t + h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageInputs {
    pub start: f64,
    pub mid: f64,
    pub end: f64,
}

impl StageInputs {
    /// Zero-order hold: the same sample for every stage.
    pub fn held(y: f64) -> Self {
        Self { start: y, mid: y, end: y }
    }

    /// Linear interpolation between two consecutive samples.
    pub fn linear(y0: f64, y1: f64) -> Self {
        Self { start: y0, mid: 0.5 * (y0 + y1), end: y1 }
    }
}

/// `ŷ = cᵀx̂`.
pub fn output(x: &[f64]) -> f64 {
    x.iter().step_by(2).sum()
}

fn derivative_into(x: &[f64], y: f64, omega_hat: f64, gains: &ObserverGains, out: &mut [f64]) {
    let e = y - output(x);
    for (i, &nu) in gains.orders.iter().enumerate() {
        let (a, b) = (x[2 * i], x[2 * i + 1]);
        out[2 * i] = omega_hat * (-nu * b + gains.l[2 * i] * e);
        out[2 * i + 1] = omega_hat * (nu * a + gains.l[2 * i + 1] * e);
    }
}

/// Right-hand side `ω̂ (A x̂ + l y)`.
pub fn derivative(
    state: &ObserverState,
    y: f64,
    omega_hat: f64,
    gains: &ObserverGains,
) -> Result<Vec<f64>, ObserverError> {
    check_dim(state, gains)?;
    if !(omega_hat > 0.0) {
        return Err(ObserverError::NonPositiveFrequency { omega_hat, t: state.t });
    }
    let mut out = vec![0.0; state.x.len()];
    derivative_into(&state.x, y, omega_hat, gains, &mut out);
    Ok(out)
}

fn check_dim(state: &ObserverState, gains: &ObserverGains) -> Result<(), ObserverError> {
    if state.x.len() != gains.l.len() {
        return Err(ObserverError::DimensionMismatch { expected: gains.l.len(), got: state.x.len() });
    }
    Ok(())
}

/// One classical RK4 step of length `h`. `ω̂` is held over the step.
pub fn step(
    state: &ObserverState,
    inputs: StageInputs,
    omega_hat: f64,
    gains: &ObserverGains,
    h: f64,
) -> Result<ObserverState, ObserverError> {
    check_dim(state, gains)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(ObserverError::InvalidStep(h));
    }
    if !(omega_hat > 0.0) || !omega_hat.is_finite() {
        return Err(ObserverError::NonPositiveFrequency { omega_hat, t: state.t });
    }
    let dim = state.x.len();
    let x = &state.x;
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    derivative_into(x, inputs.start, omega_hat, gains, &mut k1);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    derivative_into(&tmp, inputs.mid, omega_hat, gains, &mut k2);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    derivative_into(&tmp, inputs.mid, omega_hat, gains, &mut k3);
    for i in 0..dim {
        tmp[i] = x[i] + h * k3[i];
    }
    derivative_into(&tmp, inputs.end, omega_hat, gains, &mut k4);

    let next: Vec<f64> = (0..dim).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    let t = state.t + h;
    let max_abs = next.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) });
    if !(max_abs <= DIVERGENCE_LIMIT) {
        return Err(ObserverError::Divergence { t, max_abs });
    }
    Ok(ObserverState { x: next, t })
}

/// Observability matrix with rows `cᵀ(J/ν_max)^k`, `k = 0 … 2n−1`, and its
/// numerical rank. Scaling `J` does not change the rank and keeps entries bounded.
pub fn observability_matrix(orders: &[f64]) -> (DMatrix<f64>, usize) {
    let dim = 2 * orders.len();
    let scale = orders.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let j = internal_model(orders) / scale;
    let mut row = DVector::from_vec(output_vector(orders.len())).transpose();
    let mut o = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        o.set_row(k, &row);
        row = &row * &j;
    }
    let sv = o.singular_values();
    let top = sv.iter().fold(0.0f64, |m, v| m.max(*v));
    let tol = top * 1e-9;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    (o, rank)
}

/// Observer with its own gains and state.
#[derive(Debug, Clone)]
pub struct Observer {
    gains: ObserverGains,
    state: ObserverState,
}

impl Observer {
    pub fn new(gains: ObserverGains) -> Self {
        let state = ObserverState::zeros(gains.n());
        Self { gains, state }
    }

    pub fn with_state(gains: ObserverGains, state: ObserverState) -> Result<Self, ObserverError> {
        check_dim(&state, &gains)?;
        Ok(Self { gains, state })
    }

    pub fn gains(&self) -> &ObserverGains {
        &self.gains
    }

    pub fn state(&self) -> &ObserverState {
        &self.state
    }

    pub fn output(&self) -> f64 {
        output(&self.state.x)
    }

    pub fn advance(&mut self, inputs: StageInputs, omega_hat: f64, h: f64) -> Result<(), ObserverError> {
        self.state = step(&self.state, inputs, omega_hat, &self.gains, h)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn set(orders: &[f64]) -> HarmonicSet {
        HarmonicSet::new(orders.to_vec()).unwrap()
    }

    // l = 0 bypasses the Hurwitz check; only used to exercise the ODE itself.
    fn raw_gains(orders: &[f64], l: Vec<f64>) -> ObserverGains {
        ObserverGains::unchecked(ObserverVariant::MSogi, orders, l)
    }

    #[test]
    fn derivative_examples() {
        let g = raw_gains(&[1.0], vec![0.0, 0.0]);
        let zero = derivative(&ObserverState::zeros(1), 0.0, 1.0, &g).unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);
        let rot = derivative(&ObserverState { x: vec![1.0, 0.0], t: 0.0 }, 0.0, 1.0, &g).unwrap();
        assert_eq!(rot, vec![0.0, 1.0]);
        let g = raw_gains(&[1.0], vec![2.0, -1.0]);
        let forced = derivative(&ObserverState::zeros(1), 1.0, 1.0, &g).unwrap();
        assert_eq!(forced, vec![2.0, -1.0]);
    }

    #[test]
    fn derivative_matches_dense_form() {
        let h = set(&[1.0, 2.0, 4.5]);
        let g = ObserverGains::msogi(&h, &[1.0, 0.7, 0.4], &[-0.3, 0.1, -0.2]).unwrap();
        let x = vec![0.3, -1.2, 0.5, 0.8, -0.1, 0.05];
        let (y, w) = (0.9, 300.0);
        let m = g.system_matrices();
        let dense = (&m.a * DVector::from_column_slice(&x) + DVector::from_column_slice(g.l()) * y) * w;
        let fast = derivative(&ObserverState { x, t: 0.0 }, y, w, &g).unwrap();
        for (a, b) in dense.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn non_positive_frequency_is_rejected() {
        let g = ObserverGains::ssogi(&set(&[1.0])).unwrap();
        let s = ObserverState::zeros(1);
        assert!(matches!(derivative(&s, 0.0, 0.0, &g), Err(ObserverError::NonPositiveFrequency { .. })));
        assert!(matches!(
            step(&s, StageInputs::held(0.0), -1.0, &g, 1e-4),
            Err(ObserverError::NonPositiveFrequency { .. })
        ));
        assert_eq!(step(&s, StageInputs::held(0.0), 1.0, &g, 0.0), Err(ObserverError::InvalidStep(0.0)));
    }

    #[test]
    fn rk4_rotation_quarter_turn() {
        let g = raw_gains(&[1.0], vec![0.0, 0.0]);
        let h = 1e-4;
        let steps = (FRAC_PI_2 / h).floor() as usize;
        let mut s = ObserverState { x: vec![1.0, 0.0], t: 0.0 };
        for _ in 0..steps {
            s = step(&s, StageInputs::held(0.0), 1.0, &g, h).unwrap();
        }
        let last = FRAC_PI_2 - s.t;
        s = step(&s, StageInputs::held(0.0), 1.0, &g, last).unwrap();
        assert!(s.x[0].abs() < 1e-8 && (s.x[1] - 1.0).abs() < 1e-8, "{:?}", s.x);
    }

    #[test]
    fn free_response_decays() {
        let h = set(&[1.0, 3.0]);
        let g = ObserverGains::ssogi(&h).unwrap();
        let slowest = closed_loop_eigenvalues(h.orders(), g.l()).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let w = 2.0 * PI * 50.0;
        // long enough for a 1e-8 decay on the slowest mode
        let t_end = (1e-8f64).ln() / (slowest * w);
        let mut s = ObserverState { x: vec![1.0, -0.5, 0.3, 0.2], t: 0.0 };
        let n0 = s.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dt = 1e-4;
        while s.t < t_end {
            s = step(&s, StageInputs::held(0.0), w, &g, dt).unwrap();
        }
        let n1 = s.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(n1 < 1e-6 * n0, "{n1}");
    }

    #[test]
    fn tracks_single_sinusoid() {
        let h = set(&[1.0]);
        let g = ObserverGains::ssogi(&h).unwrap();
        let w = 2.0 * PI * 50.0;
        let dt = 1e-4;
        let mut s = ObserverState::zeros(1);
        let mut worst = (0.0f64, 0.0f64);
        for k in 0..4000 {
            let t = k as f64 * dt;
            let inputs =
                StageInputs { start: (w * t).cos(), mid: (w * (t + dt / 2.0)).cos(), end: (w * (t + dt)).cos() };
            s = step(&s, inputs, w, &g, dt).unwrap();
            if s.t >= 0.38 {
                worst.0 = worst.0.max((s.x[0] - (w * s.t).cos()).abs());
                worst.1 = worst.1.max((s.x[1] - (w * s.t).sin()).abs());
            }
        }
        assert!(worst.0 < 1e-3 && worst.1 < 1e-3, "{worst:?}");
    }

    #[test]
    fn output_examples() {
        assert_eq!(output(&[0.0, 0.0]), 0.0);
        assert_eq!(output(&[1.0, 9.0, 2.0, 9.0]), 3.0);
    }

    #[test]
    fn observability_rank() {
        assert_eq!(observability_matrix(&[1.0]).1, 2);
        assert_eq!(observability_matrix(&[1.0, 2.0, 3.0]).1, 6);
        assert!(observability_matrix(&[1.0, 1.0]).1 < 4);
        assert_eq!(observability_matrix(&[1.0, 5.0 / 3.0, 2.5, 7.0]).1, 8);
    }

    #[test]
    fn variant_invariants() {
        let h = set(&[1.0, 2.0]);
        assert!(ObserverGains::from_vector(ObserverVariant::SSogi, &h, vec![1.0, 0.1, 1.0, 0.0]).is_err());
        assert!(ObserverGains::from_vector(ObserverVariant::Anf, &h, vec![2.0, 0.0, 1.0, 0.0]).is_err());
        assert!(matches!(ObserverGains::msogi(&h, &[-1.0, 1.0], &[0.0, 0.0]), Err(ObserverError::NotHurwitz { .. })));
        let s = ObserverGains::ssogi(&h).unwrap();
        assert!((s.k(1) - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        assert_eq!(s.g(0), 0.0);
        assert!(ObserverGains::anf(&h).is_ok());
    }

    #[test]
    fn divergence_is_reported() {
        let g = raw_gains(&[1.0], vec![0.0, 0.0]);
        let s = ObserverState { x: vec![1e13, 0.0], t: 0.5 };
        match step(&s, StageInputs::held(0.0), 1.0, &g, 1e-4) {
            Err(ObserverError::Divergence { t, .. }) => assert!((t - 0.5001).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let h = set(&[1.0, 3.0]);
        let g = ObserverGains::msogi(&h, &[1.5, 1.0], &[-0.2, 0.3]).unwrap();
        let w = 2.0 * PI * 50.0;
        let signal = |t: f64| (w * t).cos() + 0.3 * (3.0 * w * t + 0.4).cos();
        let run = |dt: f64| {
            let n = (0.02 / dt).round() as usize;
            let mut s = ObserverState::zeros(2);
            for k in 0..n {
                let t = k as f64 * dt;
                let inp = StageInputs { start: signal(t), mid: signal(t + dt / 2.0), end: signal(t + dt) };
                s = step(&s, inp, w, &g, dt).unwrap();
            }
            s.x
        };
        let base = 2e-4;
        let reference = run(base / 16.0);
        let err = |x: Vec<f64>| x.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let coarse = err(run(base));
        let fine = err(run(base / 2.0));
        assert!(coarse / fine >= 8.0, "{coarse} / {fine}");
    }

    #[test]
    fn zero_g_msogi_matches_ssogi() {
        let h = set(&[1.0, 3.0, 5.0]);
        let k = [1.2, 0.8, 0.5];
        let a = ObserverGains::ssogi_with_k(&h, &k).unwrap();
        let b = ObserverGains::msogi(&h, &k, &[0.0; 3]).unwrap();
        let mut sa = ObserverState::zeros(3);
        let mut sb = ObserverState::zeros(3);
        for i in 0..500 {
            let y = (i as f64 * 0.0314).cos();
            sa = step(&sa, StageInputs::held(y), 314.0, &a, 1e-4).unwrap();
            sb = step(&sb, StageInputs::held(y), 314.0, &b, 1e-4).unwrap();
        }
        assert_eq!(sa, sb);
    }

    proptest! {
        #[test]
        fn output_sums_alpha_slots(x in proptest::collection::vec(-1e3f64..1e3, 1..12)) {
            let expected: f64 = (0..x.len()).step_by(2).map(|i| x[i]).sum();
            prop_assert_eq!(output(&x), expected);
        }

        #[test]
        fn bounded_input_bounded_state(
            amps in proptest::collection::vec(0.0f64..2.0, 3),
            f_hat in 39.0f64..61.0,
            seed in 0u64..1000,
        ) {
            let h = set(&[1.0, 3.0, 5.0]);
            let g = ObserverGains::ssogi(&h).unwrap();
            let w_hat = 2.0 * PI * f_hat;
            let mut s = ObserverState::zeros(3);
            let dt = 1e-4;
            let bias = (seed as f64 * 0.37).sin();
            let mut peak = 0.0f64;
            for k in 0..5000 {
                let t = k as f64 * dt;
                let y = amps[0] * (2.0 * PI * 50.0 * t).cos() + amps[1] * (300.0 * t).sin() + amps[2] * bias;
                s = step(&s, StageInputs::held(y), w_hat, &g, dt).unwrap();
                peak = peak.max(s.x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            }
            prop_assert!(peak.is_finite() && peak < 1e3);
        }
    }
}
