use std::f64::consts::PI;

use msogi::analysis::{quasi_steady_state, SteadyStateProtocol};
use msogi::extraction::{extract, wrap_angle};
use msogi::observer::{closed_loop_eigenvalues, step, ObserverGains, ObserverState, ObserverVariant, StageInputs};
use msogi::placement::{place, PoleSpec};
use msogi::signal::{FrequencySchedule, HarmonicSchedule, HarmonicSet, SignalModel};
use msogi::steady_state::responses;

fn placed(harmonics: &HarmonicSet, pairs: &[(f64, f64)]) -> ObserverGains {
    let spec = PoleSpec::from_upper_half(pairs).unwrap();
    let p = place(harmonics.orders(), &spec).unwrap();
    ObserverGains::from_vector(ObserverVariant::MSogi, harmonics, p.l).unwrap()
}

#[test]
fn placed_observer_recovers_fractional_harmonics() {
    let harmonics = HarmonicSet::new(vec![1.0, 2.5, 3.7]).unwrap();
    let gains = placed(&harmonics, &[(-1.0, 1.2), (-2.0, 2.0), (-1.5, 4.0)]);
    let amps = [10.0, 3.0, 1.5];
    let phases = [0.3, -1.2, 2.9];
    let omega = 2.0 * PI * 50.0;
    let signal = SignalModel::new(
        harmonics.clone(),
        HarmonicSchedule::constant(&amps, &phases).unwrap(),
        FrequencySchedule::constant(omega).unwrap(),
    )
    .unwrap();

    let h = 1e-5;
    let mut state = ObserverState::zeros(3);
    for k in 0..10_000 {
        let t = k as f64 * h;
        let inputs = StageInputs {
            start: signal.sample(t).unwrap(),
            mid: signal.sample(t + 0.5 * h).unwrap(),
            end: signal.sample(t + h).unwrap(),
        };
        state = step(&state, inputs, omega, &gains, h).unwrap();
        state.t = (k + 1) as f64 * h;
    }
    let t = state.t;
    for (i, est) in extract(&state.x, harmonics.orders()).iter().enumerate() {
        let (a, phi) = signal.harmonic_polar(i, t).unwrap();
        assert!((est.amplitude - a).abs() < 1e-6 * amps[0], "amplitude {i}: {} vs {a}", est.amplitude);
        assert!(wrap_angle(est.phase.unwrap() - phi).abs() < 1e-6, "phase {i}");
    }
}

#[test]
fn simulated_response_matches_closed_form_for_every_variant() {
    let harmonics = HarmonicSet::integer(3).unwrap();
    let variants = [
        ObserverGains::ssogi(&harmonics).unwrap(),
        ObserverGains::anf(&harmonics).unwrap(),
        placed(&harmonics, &[(-1.5, 1.0), (-1.5, 2.0), (-1.5, 3.0)]),
    ];
    let omega_hat = 2.0 * PI * 50.0;
    let omega = 2.0 * PI * 130.0;
    for gains in &variants {
        // settle until the slowest mode has decayed by 1e-9
        let slowest = closed_loop_eigenvalues(gains.orders(), gains.l())
            .iter()
            .map(|p| -p.re * omega_hat)
            .fold(f64::INFINITY, f64::min);
        let settle = (9.0 * 10f64.ln() / slowest * omega / (2.0 * PI)).ceil() as usize;
        let protocol = SteadyStateProtocol { settle_periods: settle.max(10), ..Default::default() };
        let sim = quasi_steady_state(gains, omega_hat, omega, protocol).unwrap();
        for index in 0..3 {
            let r = responses(gains, omega_hat, omega, index).unwrap();
            let z = sim.states[2 * index];
            assert!((z.norm() - r.a_y).abs() < 1e-5 * r.a_y.max(1e-3), "{} #{index}", gains.variant());
            assert!(wrap_angle(z.arg() - r.phi_y.unwrap()).abs() < 1e-5, "{} #{index}", gains.variant());
        }
    }
}
