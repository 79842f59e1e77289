use std::f64::consts::PI;

use msrr_core::circuit::*;
use msrr_core::constants::MU_0;
use msrr_core::geometry::{DesignParameter, ResonatorGeometry, ValidatedGeometry};
use proptest::prelude::*;

/// Complete elliptic integrals K(m), E(m) by the arithmetic-geometric mean.
fn ellip_ke(m: f64) -> (f64, f64) {
    let (mut a, mut b) = (1.0, (1.0 - m).sqrt());
    let mut c_sum = 0.5 * m;
    let mut pow = 0.5;
    while (a - b).abs() > 1e-16 * a {
        let an = 0.5 * (a + b);
        let cn = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        c_sum += pow * cn * cn;
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - c_sum))
}

/// Maxwell's mutual inductance of coaxial equal loops, H.
fn maxwell_mutual(r_mm: f64, d_mm: f64) -> f64 {
    let (r, d) = (r_mm * 1e-3, d_mm * 1e-3);
    let m = 4.0 * r * r / (4.0 * r * r + d * d);
    let k = m.sqrt();
    let (kk, ee) = ellip_ke(m);
    MU_0 * r * ((2.0 / k - k) * kk - 2.0 / k * ee)
}

fn reference() -> ValidatedGeometry<f64> {
    ResonatorGeometry::reference().validate().unwrap()
}

fn tuned(mode: PortMode) -> CircuitParams<f64> {
    let opts = CircuitOptions {
        feed: FeedSetting::Tuned(mode),
        ..CircuitOptions::default()
    };
    CircuitParams::from_geometry(&reference(), &opts).unwrap()
}

#[test]
fn neumann_matches_maxwell() {
    for (r, d) in [(2.9, 2.2), (2.9, 0.5), (5.0, 8.0), (1.0, 0.05)] {
        let m = neumann_mutual_inductance(r, d);
        let oracle = maxwell_mutual(r, d);
        assert!((m / oracle - 1.0).abs() < 1e-9, "R={r} d={d}: {m} vs {oracle}");
    }
    assert!((maxwell_mutual(2.9, 2.2) * 1e9 - 2.0697).abs() < 1e-3);
}

#[test]
fn reference_coupling_and_modes() {
    let p = tuned(PortMode::Single);
    assert!((p.coupling - 0.2244).abs() < 1e-3, "{}", p.coupling);
    let m = eigenmodes(&p);
    assert!((m.symmetric_hz / 2.87e9 - 1.0).abs() < 1e-9);
    assert!(m.antisymmetric_hz > m.symmetric_hz);
}

#[test]
fn capacitance_monotonicity() {
    let base = ResonatorGeometry::<f64>::reference();
    let c = |g: ResonatorGeometry<f64>| split_capacitance(&g.validate().unwrap(), FRINGING_MULTIPLIER);
    let c0 = c(base);
    assert!(c(base.with_parameter(DesignParameter::SplitGap, 0.3)) > c0);
    assert!(c(base.with_parameter(DesignParameter::StripWidth, 1.2)) > c0);
}

#[test]
fn frozen_multiplier_spans_one_to_six_ghz() {
    let f = |r: f64| {
        let g = ResonatorGeometry::reference()
            .with_parameter(DesignParameter::RingRadius, r)
            .validate()
            .unwrap();
        let p = CircuitParams::from_geometry(
            &g,
            &CircuitOptions {
                feed: FeedSetting::Fixed { capacitance_f: 1e-15 },
                ..CircuitOptions::default()
            },
        )
        .unwrap();
        eigenmodes(&p).symmetric_hz
    };
    assert!(f(1.5) > 6e9);
    assert!(f(8.0) < 1e9);
    for target in [1e9, 2e9] {
        let m = calibrate_fringing_multiplier(&reference(), target).unwrap();
        assert!(m > FRINGING_MULTIPLIER);
    }
}

#[test]
fn matched_reflection_and_far_field_limit() {
    for mode in [PortMode::Single, PortMode::Dual] {
        let p = tuned(mode);
        let (_, m) = tune_feed(&p, mode).unwrap();
        assert!(s11(&p, m.matched_hz, mode).norm() < 0.05);
        assert!(s11(&p, 0.5e9, mode).norm() > 0.99);
        assert!(s11(&p, 10e9, mode).norm() > 0.9);
    }
}

/// Local minima of |S11| deeper than 3 dB below both neighbours' envelope.
fn dips(p: &CircuitParams<f64>, mode: PortMode) -> Vec<f64> {
    let freqs: Vec<f64> = (0..8001).map(|i| 1.5e9 + i as f64 * 0.5e6).collect();
    let s: Vec<f64> = s11_spectrum(p, &freqs, mode).iter().map(|z| z.norm()).collect();
    (1..s.len() - 1)
        .filter(|&i| s[i] < s[i - 1] && s[i] <= s[i + 1] && s[i] < 0.7)
        .map(|i| freqs[i])
        .collect()
}

#[test]
fn single_port_shows_both_modes() {
    let p = tuned(PortMode::Single);
    let d = dips(&p, PortMode::Single);
    assert_eq!(d.len(), 2, "{d:?}");
    let m = eigenmodes(&p);
    assert!((d[0] / m.symmetric_hz - 1.0).abs() < 0.08);
    assert!((d[1] / m.antisymmetric_hz - 1.0).abs() < 0.08);
}

#[test]
fn symmetric_mode_currents_are_co_directional() {
    let p = tuned(PortMode::Single);
    let res = loaded_resonance(&p, PortMode::Single).unwrap();
    let s = solve_currents(&p, eigenmodes(&p).symmetric_hz, PortMode::Single, 1.0).unwrap();
    assert!((s.i2 / s.i1).re > 0.95);
    let s = solve_currents(&p, res.peak_hz, PortMode::Single, 1.0).unwrap();
    assert!((s.i2 / s.i1).re > 0.0);
    let a = solve_currents(&p, eigenmodes(&p).antisymmetric_hz, PortMode::Single, 1.0).unwrap();
    assert!((a.i2 / a.i1).re < -0.9);
}

#[test]
fn spec_current_ratio_example() {
    let l = 9.22e-9;
    let f0 = 3.2e9;
    let c = 1.0 / ((2.0 * PI * f0).powi(2) * l);
    let p = CircuitParams::new(l, c, 135.0, 0.3, 4e-14, 50.0).unwrap();
    let s = solve_currents(&p, eigenmodes(&p).symmetric_hz, PortMode::Single, 1.0).unwrap();
    assert!((s.i2 / s.i1).norm() > 0.95);
    let z = solve_currents(&p, 3e9, PortMode::Dual, 0.0).unwrap();
    assert_eq!(z.i1.norm(), 0.0);
    assert_eq!(z.i2.norm(), 0.0);
}

#[test]
fn loaded_q_in_measured_range() {
    for mode in [PortMode::Single, PortMode::Dual] {
        let p = tuned(mode);
        let q = loaded_resonance(&p, mode).unwrap();
        assert!(q.loaded_q > 121.0 && q.loaded_q < 146.0, "{mode}: {}", q.loaded_q);
        assert!(q.loaded_q <= p.unloaded_q * (1.0 + p.coupling));
        assert!((q.bandwidth_hz - q.peak_hz / q.loaded_q).abs() < 1e-3);
    }
}

fn arb_params() -> impl Strategy<Value = CircuitParams<f64>> {
    (1e-9f64..3e-8, 1e-13f64..1e-12, 20.0f64..1000.0, 0.01f64..0.8, 1e-15f64..2e-13)
        .prop_map(|(l, c, q, k, cf)| CircuitParams::new(l, c, q, k, cf, 50.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_ordering(p in arb_params()) {
        let m = eigenmodes(&p);
        prop_assert!(m.symmetric_hz < p.ring_frequency_hz());
        prop_assert!(p.ring_frequency_hz() < m.antisymmetric_hz);
    }

    #[test]
    fn passive_reflection(p in arb_params(), x in 0.2f64..3.0, dual in any::<bool>()) {
        let mode = if dual { PortMode::Dual } else { PortMode::Single };
        let f = p.ring_frequency_hz() * x;
        prop_assert!(s11(&p, f, mode).norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn dual_drive_is_symmetric_at_every_frequency(p in arb_params(), x in 0.2f64..3.0) {
        let s = solve_currents(&p, p.ring_frequency_hz() * x, PortMode::Dual, 1.0).unwrap();
        prop_assert!((s.i1 - s.i2).norm() <= 1e-12 * s.i1.norm());
    }

    #[test]
    fn dissipated_equals_delivered(p in arb_params(), dual in any::<bool>(), watts in 0.01f64..20.0) {
        let mode = if dual { PortMode::Dual } else { PortMode::Single };
        let f = eigenmodes(&p).symmetric_hz;
        let s = solve_currents(&p, f, mode, watts).unwrap();
        let r = p.loss_resistance_ohm(f);
        let diss = 0.5 * r * (s.i1.norm_sqr() + s.i2.norm_sqr());
        prop_assert!((diss / watts - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ringdown_is_linear_in_q(q in 1.0f64..1e4, f in 1e8f64..1e10) {
        prop_assert_eq!(ringdown_time(2.0 * q, f).unwrap(), 2.0 * ringdown_time(q, f).unwrap());
    }

    #[test]
    fn coupling_decreases_with_separation(r in 1.0f64..6.0, d1 in 0.5f64..5.0, dd in 0.05f64..5.0) {
        let k1 = mutual_coupling(r, d1, 1.0).unwrap();
        let k2 = mutual_coupling(r, d1 + dd, 1.0).unwrap();
        prop_assert!(k2 < k1 && k2 > 0.0);
    }
}
