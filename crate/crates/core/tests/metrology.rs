use msrr_core::circuit::{eigenmodes, loaded_resonance, s11_spectrum, CircuitOptions, CircuitParams, PortMode};
use msrr_core::geometry::{DesignParameter, ResonatorGeometry};
use msrr_core::metrology::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn rabi_trace(p: &RabiParams<f64>, n: usize, dt: f64, noise: f64, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, noise.max(1e-300)).unwrap();
    let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let v = t
        .iter()
        .map(|&ti| rabi_model(p, ti) + if noise > 0.0 { dist.sample(&mut rng) } else { 0.0 })
        .collect();
    Trace::new(t, v).unwrap()
}

type Trace = TimeTrace<f64>;

fn reference_rabi() -> RabiParams<f64> {
    RabiParams {
        frequency_hz: 17.2e6,
        decay_time_s: 1e-6,
        amplitude: 0.4,
        offset: 1.0,
        phase_rad: 0.3,
    }
}

#[test]
fn rabi_noisy_frequency_within_one_percent() {
    let p = reference_rabi();
    for seed in 0..5 {
        let tr = rabi_trace(&p, 600, 2e-9, p.amplitude / 20.0, seed);
        let f = fit_rabi(&tr).unwrap();
        let rel = (f.params.frequency_hz / p.frequency_hz - 1.0).abs();
        assert!(rel < 0.01, "seed {seed}: {rel}");
    }
}

#[test]
fn rabi_noiseless_round_trip() {
    let p = reference_rabi();
    let f = fit_rabi(&rabi_trace(&p, 600, 2e-9, 0.0, 0)).unwrap();
    let q = f.params;
    for (got, want) in [
        (q.frequency_hz, p.frequency_hz),
        (q.decay_time_s, p.decay_time_s),
        (q.amplitude, p.amplitude),
        (q.offset, p.offset),
        (q.phase_rad, p.phase_rad),
    ] {
        assert!((got / want - 1.0).abs() < 1e-4, "{got} vs {want}");
    }
    assert!(!f.decay_at_bound);
}

#[test]
fn undamped_cosine_hits_decay_bound() {
    let p = RabiParams {
        decay_time_s: f64::INFINITY,
        ..reference_rabi()
    };
    let f = fit_rabi(&rabi_trace(&p, 400, 2.5e-9, 0.0, 0)).unwrap();
    assert!(f.decay_at_bound);
    assert!(f.params.decay_time_s > 0.0);
    assert!((f.params.frequency_hz / p.frequency_hz - 1.0).abs() < 1e-6);
}

#[test]
fn rabi_rejects_constant_and_slow_traces() {
    let t: Vec<f64> = (0..100).map(|i| i as f64 * 1e-9).collect();
    let flat = Trace::new(t.clone(), vec![2.0; 100]).unwrap();
    assert!(matches!(fit_rabi(&flat), Err(MetrologyError::InsufficientOscillations(_))));
    let slow = RabiParams {
        frequency_hz: 1e7,
        decay_time_s: f64::INFINITY,
        ..reference_rabi()
    };
    let tr = rabi_trace(&slow, 100, 1e-9, 0.0, 0);
    assert!(matches!(fit_rabi(&tr), Err(MetrologyError::InsufficientOscillations(_))));
    let short = Trace::new(t[..5].to_vec(), vec![1.0, 2.0, 1.0, 2.0, 1.0]).unwrap();
    assert!(matches!(fit_rabi(&short), Err(MetrologyError::TooFewPoints { .. })));
}

#[test]
fn rabi_fit_is_scale_equivariant() {
    let p = reference_rabi();
    let tr = rabi_trace(&p, 600, 2e-9, 0.01, 3);
    let a = fit_rabi(&tr).unwrap();
    let b = fit_rabi(&tr.scaled(7.5)).unwrap();
    assert!((a.params.frequency_hz / b.params.frequency_hz - 1.0).abs() < 1e-9);
    assert!((a.params.decay_time_s / b.params.decay_time_s - 1.0).abs() < 1e-7);
    assert!((b.params.amplitude / a.params.amplitude - 7.5).abs() < 1e-7);
    assert!((b.params.offset / a.params.offset - 7.5).abs() < 1e-7);
}

fn lorentz_db(f0: f64, q: f64, depth: f64, freqs: &[f64]) -> Vec<(f64, f64)> {
    let hw = f0 / (2.0 * q);
    freqs
        .iter()
        .map(|&f| {
            let u = (f - f0) / hw;
            let p = 1.0 - depth / (1.0 + u * u);
            (f, 10.0 * p.log10())
        })
        .collect()
}

fn scan(center: f64, half: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| center - half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn s11_noiseless_round_trip() {
    let pts = lorentz_db(2.87e9, 135.0, 0.98, &scan(2.87e9, 80e6, 401));
    let r = fit_s11_dip(&pts).unwrap();
    assert!((r.f0_hz / 2.87e9 - 1.0).abs() < 1e-8);
    assert!((r.q_loaded / 135.0 - 1.0).abs() < 1e-4);
    assert!((r.depth_db - 10.0 * (1.0f64 / 0.02).log10()).abs() < 1e-3);
}

/// Dip in the complex reflection, `1 - D / (1 + j u)`, with complex Gaussian
/// noise. `snr` is the dip depth in `|S11|^2` over the rms noise of `|S11|^2`
/// away from resonance.
fn noisy_dip(f0: f64, q: f64, d: f64, snr: f64, freqs: &[f64], seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = 2.0 * d - d * d;
    let noise = Normal::new(0.0, depth / (2.0 * snr)).unwrap();
    let hw = f0 / (2.0 * q);
    freqs
        .iter()
        .map(|&f| {
            let s = num_complex::Complex::new(1.0, 0.0) - d / num_complex::Complex::new(1.0, (f - f0) / hw)
                + num_complex::Complex::new(noise.sample(&mut rng), noise.sample(&mut rng));
            (f, 10.0 * s.norm_sqr().log10())
        })
        .collect()
}

#[test]
fn s11_noisy_q_within_three_percent() {
    let freqs = scan(2.87e9, 50e6, 1601);
    for seed in 0..20 {
        let r = fit_s11_dip(&noisy_dip(2.87e9, 135.0, 0.9, 15.0, &freqs, seed)).unwrap();
        assert!((r.q_loaded / 135.0 - 1.0).abs() < 0.03, "seed {seed}: {}", r.q_loaded);
    }
}

#[test]
fn s11_flat_and_monotone_traces_have_no_dip() {
    let freqs = scan(2.87e9, 80e6, 101);
    let flat: Vec<(f64, f64)> = freqs.iter().map(|&f| (f, 0.0)).collect();
    assert!(matches!(fit_s11_dip(&flat), Err(MetrologyError::NoDipFound(_))));
    let ramp: Vec<(f64, f64)> = freqs.iter().enumerate().map(|(i, &f)| (f, -(i as f64) * 0.01)).collect();
    assert!(matches!(fit_s11_dip(&ramp), Err(MetrologyError::NoDipFound(_))));
}

#[test]
fn s11_fit_recovers_circuit_resonance() {
    let g = ResonatorGeometry::<f64>::reference().validate().unwrap();
    let p = CircuitParams::from_geometry(&g, &CircuitOptions::default()).unwrap();
    let res = loaded_resonance(&p, PortMode::Single).unwrap();
    let freqs = scan(res.peak_hz, 60e6, 301);
    let s = s11_spectrum(&p, &freqs, PortMode::Single);
    let pts: Vec<(f64, f64)> = freqs.iter().zip(&s).map(|(&f, z)| (f, 20.0 * z.norm().log10())).collect();
    let r = fit_s11_dip(&pts).unwrap();
    assert!((r.f0_hz / res.peak_hz - 1.0).abs() < 0.02);
    assert!((r.q_loaded / res.loaded_q - 1.0).abs() < 0.02, "{} vs {}", r.q_loaded, res.loaded_q);
}

#[test]
fn radius_offset_shifts_fitted_dip() {
    let opts = CircuitOptions::default();
    let fit_for = |r: f64| {
        let g = ResonatorGeometry::<f64>::reference()
            .with_parameter(DesignParameter::RingRadius, r)
            .validate()
            .unwrap();
        let p = CircuitParams::from_geometry(&g, &opts).unwrap();
        let fs = eigenmodes(&p).symmetric_hz;
        let freqs = scan(fs * 0.95, 150e6, 601);
        let s = s11_spectrum(&p, &freqs, PortMode::Single);
        let pts: Vec<(f64, f64)> = freqs.iter().zip(&s).map(|(&f, z)| (f, 20.0 * z.norm().log10())).collect();
        fit_s11_dip(&pts).unwrap().f0_hz
    };
    let shift = (fit_for(2.9) - fit_for(3.0)) / 1e6;
    // Measured radius sensitivity of about 1157 MHz/mm; the lumped model gives
    // the same sign and order.
    assert!(shift > 58.0 && shift < 232.0, "{shift} MHz");
}

fn ringdown_trace(dir: RingdownDirection, tau: f64, span: f64, n: usize, noise: f64, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, noise.max(1e-300)).unwrap();
    let t: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
    let v = t
        .iter()
        .map(|&ti| ringdown_model(dir, 1.0, tau, ti) + if noise > 0.0 { dist.sample(&mut rng) } else { 0.0 })
        .collect();
    Trace::new(t, v).unwrap()
}

#[test]
fn ringdown_noisy_build_up_within_six_percent() {
    for seed in 0..5 {
        let tr = ringdown_trace(RingdownDirection::BuildUp, 12.5e-9, 80e-9, 200, 1.0 / 15.0, seed);
        let f = fit_ringdown(&tr).unwrap();
        assert_eq!(f.direction, RingdownDirection::BuildUp);
        assert!((f.tau_s / 12.5e-9 - 1.0).abs() < 0.06, "seed {seed}: {}", f.tau_s);
    }
}

#[test]
fn ringdown_noiseless_decay_exact() {
    let tr = ringdown_trace(RingdownDirection::Decay, 15e-9, 90e-9, 200, 0.0, 0);
    let f = fit_ringdown(&tr).unwrap();
    assert_eq!(f.direction, RingdownDirection::Decay);
    assert!((f.tau_s / 15e-9 - 1.0).abs() < 1e-6);
    assert!(!f.short_trace && !f.poorly_constrained);
}

#[test]
fn short_ringdown_is_flagged() {
    let tr = ringdown_trace(RingdownDirection::BuildUp, 12.5e-9, 10e-9, 50, 1.0 / 15.0, 1);
    match fit_ringdown(&tr) {
        Err(MetrologyError::FitDiverged(_)) => {}
        Ok(f) => assert!(f.short_trace && f.poorly_constrained, "{f:?}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn power_chain_predicts_rabi_frequency() {
    let r = fit_power_ratio(&[(1.0_f64, 2.0), (4.0, 4.0), (9.0, 6.0)]).unwrap();
    let f = r.predicted_rabi_hz(9.0);
    assert!((f - 16.8e6).abs() < 1.0);
    assert!((f / 17.2e6 - 1.0).abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rabi_round_trip_over_parameters(
        f in 5e6f64..40e6,
        tau in 0.3e-6f64..5e-6,
        amp in 0.1f64..2.0,
        off in -1.0f64..1.0,
        phase in -3.0f64..3.0,
    ) {
        let p = RabiParams { frequency_hz: f, decay_time_s: tau, amplitude: amp, offset: off, phase_rad: phase };
        let fit = fit_rabi(&rabi_trace(&p, 500, 2e-9, 0.0, 0)).unwrap();
        prop_assert!((fit.params.frequency_hz / f - 1.0).abs() < 1e-4);
        prop_assert!((fit.params.decay_time_s / tau - 1.0).abs() < 1e-4);
        prop_assert!((fit.params.amplitude / amp - 1.0).abs() < 1e-4);
        prop_assert!((fit.params.offset - off).abs() < 1e-4 * off.abs().max(amp));
    }

    #[test]
    fn s11_round_trip_over_q(q in 60.0f64..400.0, depth in 0.5f64..0.999) {
        let pts = lorentz_db(2.87e9, q, depth, &scan(2.87e9, 2.87e9 * 6.0 / q, 301));
        let r = fit_s11_dip(&pts).unwrap();
        prop_assert!((r.q_loaded / q - 1.0).abs() < 1e-4);
    }

    #[test]
    fn ringdown_round_trip_over_tau(tau in 5e-9f64..30e-9, decay in any::<bool>()) {
        let dir = if decay { RingdownDirection::Decay } else { RingdownDirection::BuildUp };
        let f = fit_ringdown(&ringdown_trace(dir, tau, 6.0 * tau, 200, 0.0, 0)).unwrap();
        prop_assert_eq!(f.direction, dir);
        prop_assert!((f.tau_s / tau - 1.0).abs() < 1e-6);
    }
}
