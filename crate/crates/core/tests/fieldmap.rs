use std::f64::consts::PI;

use msrr_core::circuit::{CircuitOptions, CircuitParams, DriveState, FeedSetting, PortMode};
use msrr_core::constants::MU_0;
use msrr_core::fieldmap::*;
use msrr_core::geometry::{discretize, DiscretizeOptions, ResonatorGeometry, ValidatedGeometry};
use num_complex::Complex;
use proptest::prelude::*;

fn reference() -> ValidatedGeometry<f64> {
    ResonatorGeometry::reference().validate().unwrap()
}

fn ellip_ke(m: f64) -> (f64, f64) {
    let (mut a, mut b) = (1.0, (1.0 - m).sqrt());
    let mut c_sum = 0.5 * m;
    let mut pow = 0.5;
    while (a - b).abs() > 4.0 * f64::EPSILON * a {
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

/// Exact field of a circular loop of radius `a` (mm) in the plane z = z0, 1 A, gauss.
fn loop_field(a: f64, z0: f64, p: [f64; 3]) -> [f64; 3] {
    let (x, y, z) = (p[0] * 1e-3, p[1] * 1e-3, (p[2] - z0) * 1e-3);
    let a = a * 1e-3;
    let rho = x.hypot(y);
    if rho < 1e-15 {
        return [0.0, 0.0, MU_0 * a * a / (2.0 * (a * a + z * z).powf(1.5)) * 1e4];
    }
    let m = 4.0 * a * rho / ((a + rho).powi(2) + z * z);
    let (k, e) = ellip_ke(m);
    let pre = MU_0 / (2.0 * PI * ((a + rho).powi(2) + z * z).sqrt());
    let den = (a - rho).powi(2) + z * z;
    let bz = pre * (k + (a * a - rho * rho - z * z) / den * e);
    let br = pre * z / rho * (-k + (a * a + rho * rho + z * z) / den * e);
    [br * x / rho * 1e4, br * y / rho * 1e4, bz * 1e4]
}

fn pair_oracle(p: [f64; 3]) -> [f64; 3] {
    let a = loop_field(2.9, -1.1, p);
    let b = loop_field(2.9, 1.1, p);
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn unit_source(n: usize) -> RingPairField<f64> {
    let s = discretize(&reference(), &DiscretizeOptions::default().with_segments(n)).unwrap();
    RingPairField::new(s, &DriveState::unit(PortMode::Dual))
}

fn rel(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    d / (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
}

#[test]
fn single_ring_centre_field() {
    let g = reference();
    let s = discretize(&g, &DiscretizeOptions::default()).unwrap();
    let ring0: Vec<_> = s.ring(0).copied().collect();
    let set = msrr_core::geometry::CurrentSegmentSet { segments: ring0 };
    let b = biot_savart(&set, [0.0, 0.0, -1.1], 1.0).unwrap();
    let expected = MU_0 / (2.0 * 2.9e-3);
    assert!((b[2] / expected - 1.0).abs() < 1e-9);
    assert!((b[2] * 1e4 - 2.166).abs() < 1e-3);
}

#[test]
fn pair_centre_matches_closed_form() {
    let closed = MU_0 * 2.9e-3f64.powi(2) / (2.9e-3f64.powi(2) + 1.1e-3f64.powi(2)).powf(1.5) * 1e4;
    let b = unit_source(360).field_gauss([0.0, 0.0, 0.0]).unwrap();
    assert!((b[2] / closed - 1.0).abs() < 1e-6, "{} vs {closed}", b[2]);
}

#[test]
fn on_axis_matches_closed_form_at_fine_discretization() {
    let src = unit_source(3600);
    for z in [-0.25, -0.1, 0.0, 0.13, 0.25, 0.9] {
        let b = src.field_gauss([0.0, 0.0, z]).unwrap();
        let o = pair_oracle([0.0, 0.0, z]);
        assert!((b[2] / o[2] - 1.0).abs() < 1e-8, "z={z}");
    }
}

#[test]
fn off_axis_matches_elliptic_oracle() {
    let src = unit_source(360);
    for p in [[0.25, 0.0, 0.25], [0.1, -0.2, -0.2], [1.5, 0.7, 0.3]] {
        assert!(rel(src.field_gauss(p).unwrap(), pair_oracle(p)) < 1e-7, "{p:?}");
    }
}

#[test]
fn refinement_oracle() {
    let p = [0.25, 0.0, 0.25];
    let coarse = unit_source(360).field_gauss(p).unwrap();
    let fine = unit_source(36000).field_gauss(p).unwrap();
    assert!(rel(coarse, fine) < 1e-6);
}

#[test]
fn divergence_free() {
    let src = unit_source(360);
    let h = 0.025;
    let vol = SamplingVolume::default().with_grid(5, 6, 5);
    for (p, _) in vol.nodes().unwrap() {
        let d = |axis: usize| {
            let mut a = p;
            let mut b = p;
            a[axis] += h;
            b[axis] -= h;
            (src.field_gauss(a).unwrap()[axis] - src.field_gauss(b).unwrap()[axis]) / (2.0 * h)
        };
        let div = d(0) + d(1) + d(2);
        let bmag = src.field_gauss(p).unwrap()[2].abs();
        // Divergence times the spacing, relative to the local field.
        assert!((div * h / bmag).abs() < 1e-4, "{p:?}: {div}");
    }
}

#[test]
fn mirror_and_rotation_symmetry() {
    let g = reference();
    let map = evaluate_field_grid(&g, &DriveState::unit(PortMode::Dual), &SamplingVolume::default()).unwrap();
    let mean = homogeneity(&map, FieldComponent::Z).unwrap().mean_gauss;
    let src = unit_source(360);
    let mut worst = 0.0f64;
    for s in &map.samples {
        let p = s.position_mm;
        let m = src.field_gauss([p[0], p[1], -p[2]]).unwrap();
        worst = worst.max((s.b_gauss[2] - m[2]).abs() / mean);
    }
    assert!(worst < 1e-9, "{worst}");
    let r = 0.2;
    let ref_bz = src.field_gauss([r, 0.0, 0.1]).unwrap()[2];
    for k in 0..16 {
        let phi = k as f64 * 0.39;
        let b = src.field_gauss([r * phi.cos(), r * phi.sin(), 0.1]).unwrap();
        assert!((b[2] / ref_bz - 1.0).abs() < 1e-9);
    }
}

#[test]
fn superposition_of_rings() {
    let s = discretize(&reference(), &DiscretizeOptions::default()).unwrap();
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let both = RingPairField { segments: s.clone(), currents: [one, one] };
    let a = RingPairField { segments: s.clone(), currents: [one, zero] };
    let b = RingPairField { segments: s, currents: [zero, one] };
    for p in [[0.1, 0.2, 0.05], [0.0, 0.0, 0.0], [1.0, -0.5, 0.4]] {
        let (fa, fb, fp) = (a.field_gauss(p).unwrap(), b.field_gauss(p).unwrap(), both.field_gauss(p).unwrap());
        for i in 0..3 {
            assert!((fa[i] + fb[i] - fp[i]).abs() <= 1e-14 * fp[i].abs().max(1e-12));
        }
    }
}

#[test]
fn zero_current_gives_zero_map() {
    let d = DriveState::unit(PortMode::Dual).scaled(0.0);
    let map = evaluate_field_grid(&reference(), &d, &SamplingVolume::default().with_grid(3, 4, 3)).unwrap();
    assert!(map.samples.iter().all(|s| s.b_gauss == [0.0; 3]));
    assert_eq!(homogeneity(&map, FieldComponent::Z), Err(FieldError::ZeroMeanField));
}

#[test]
fn volume_outside_bore_rejected() {
    let v = SamplingVolume::default().with_diameter(4.8);
    let e = evaluate_field_grid(&reference(), &DriveState::unit(PortMode::Dual), &v);
    assert!(matches!(e, Err(FieldError::VolumeExceedsBore { .. })));
    let mut off = SamplingVolume::default();
    off.center_mm = [2.3, 0.0, 0.0];
    assert!(off.check_bore(&reference()).is_err());
}

fn tuned(mode: PortMode) -> CircuitParams<f64> {
    let opts = CircuitOptions {
        feed: FeedSetting::Tuned(mode),
        ..CircuitOptions::default()
    };
    CircuitParams::from_geometry(&reference(), &opts).unwrap()
}

#[test]
fn homogeneity_grows_with_diameter() {
    let g = reference();
    let diam = [0.1, 0.3, 0.5, 0.8, 1.0, 1.5];
    let c = homogeneity_curve(
        &g,
        &DriveState::unit(PortMode::Dual),
        &SamplingVolume::default().with_grid(11, 12, 11),
        &diam,
        FieldComponent::Z,
        &DiscretizeOptions::default(),
    )
    .unwrap();
    assert!(c.windows(2).all(|w| w[1].report.sigma >= w[0].report.sigma));
    assert!(c[2].report.sigma < 0.007);
}

#[test]
fn sparse_sampling_agrees_with_grid() {
    let g = reference();
    let d = DriveState::unit(PortMode::Dual);
    let grid = homogeneity(&evaluate_field_grid(&g, &d, &SamplingVolume::default()).unwrap(), FieldComponent::Z).unwrap();
    let sparse = sparse_sampled_for_geometry(
        &g,
        &d,
        &SparseSampling::for_diameter(0.5, 0.5),
        FieldComponent::Z,
        &DiscretizeOptions::default(),
    )
    .unwrap();
    assert_eq!(sparse.scheme, SamplingScheme::Sparse);
    assert!((sparse.sigma / grid.sigma - 1.0).abs() < 0.2, "{} vs {}", sparse.sigma, grid.sigma);
}

#[test]
fn outlier_weighted_std() {
    struct Outlier;
    impl FieldSource<f64> for Outlier {
        fn field_gauss(&self, p: [f64; 3]) -> Result<[f64; 3], FieldError> {
            let hit = p[1].abs() < 1e-12 && p[0] > 0.0 && (p[2] - 0.1875).abs() < 1e-12;
            Ok([0.0, 0.0, if hit { 3.0 } else { 1.0 }])
        }
    }
    let mut s = SparseSampling::for_diameter(0.4, 0.5);
    s.radii_mm = vec![0.2];
    let r = sparse_sampled_homogeneity(&Outlier, &s, FieldComponent::Z).unwrap();
    let n = 32.0;
    let mean = (31.0 + 3.0) / n;
    let var = (31.0 * (1.0 - mean) * (1.0f64 - mean) + (3.0 - mean) * (3.0f64 - mean)) / n;
    assert!((r.sigma - var.sqrt() / mean).abs() < 1e-14);
}

#[test]
fn field_efficiency_orders_and_scales() {
    let g = reference();
    let vol = SamplingVolume::default().with_grid(7, 8, 7);
    let dual = field_per_sqrt_watt(&g, &tuned(PortMode::Dual), &vol, PortMode::Dual).unwrap();
    let single = field_per_sqrt_watt(&g, &tuned(PortMode::Single), &vol, PortMode::Single).unwrap();
    assert!(single.mean_bz_gauss_per_sqrt_w < dual.mean_bz_gauss_per_sqrt_w);
    let ratio = dual.mean_bz_gauss_per_sqrt_w / 1.85;
    assert!(ratio > 0.5 && ratio < 2.0, "{}", dual.mean_bz_gauss_per_sqrt_w);

    let p = tuned(PortMode::Dual);
    let raw = |w: f64| {
        let (mut d, _) = drive_for_power(&p, PortMode::Dual, w).unwrap();
        d.power_w = None;
        homogeneity(&evaluate_field_grid(&g, &d, &vol).unwrap(), FieldComponent::Z).unwrap().mean_gauss
    };
    assert!((raw(2.0) / raw(1.0) - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn dual_energy_normalization_matches_closed_form_current() {
    let p = tuned(PortMode::Dual);
    let (d, q) = drive_for_power(&p, PortMode::Dual, 1.0).unwrap();
    let i = current_for_power(&p, q, d.frequency_hz, 1.0);
    assert!((d.i1.norm() / i - 1.0).abs() < 1e-12);
    assert!((d.i2.norm() / i - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_in_current(alpha in -50.0f64..50.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -0.5f64..0.5) {
        let s = discretize(&reference(), &DiscretizeOptions::default()).unwrap();
        let p = [x, y, z];
        let b1 = biot_savart(&s, p, 1.0).unwrap();
        let ba = biot_savart(&s, p, alpha).unwrap();
        for i in 0..3 {
            prop_assert!((ba[i] - alpha * b1[i]).abs() <= 4.0 * f64::EPSILON * (alpha * b1[i]).abs().max(1e-30));
        }
    }

    #[test]
    fn uniform_field_has_zero_sigma(bz in 0.1f64..10.0, n_r in 1usize..6, n_z in 1usize..6) {
        let vol = SamplingVolume::default().with_grid(n_r, 4, n_z);
        let samples = vol.nodes().unwrap().into_iter().map(|(p, w)| FieldSample { position_mm: p, b_gauss: [0.0, 0.0, bz], weight: w }).collect();
        let map = FieldMap { samples, normalization: Normalization::PerAmpere, mode: PortMode::Dual };
        let r = homogeneity(&map, FieldComponent::Z).unwrap();
        prop_assert!(r.sigma <= 1e-12);
    }
}
