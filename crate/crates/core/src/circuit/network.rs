//! Port impedances, reflection and driven currents of the coupled loops.

use num_complex::Complex;
use rayon::prelude::*;

use crate::numeric::{brent, golden_max};
use crate::Scalar;

use super::{eigenmodes, CircuitError, CircuitParams, DriveState, PortMode};

fn omega<T: Scalar>(f: T) -> T {
    T::TAU() * f
}

fn cap_impedance<T: Scalar>(w: T, c: T) -> Complex<T> {
    Complex::new(T::zero(), -T::one() / (w * c))
}

/// Series impedance `R + j omega L + 1/(j omega C)` of one closed ring.
fn loop_impedance<T: Scalar>(p: &CircuitParams<T>, f: T) -> Complex<T> {
    let w = omega(f);
    Complex::new(p.loss_resistance_ohm(f), w * p.inductance_h) + cap_impedance(w, p.capacitance_f)
}

/// Impedance seen across ring 1's split (the feed point), excluding `C_f`.
pub fn gap_impedance<T: Scalar>(p: &CircuitParams<T>, frequency_hz: T, mode: PortMode) -> Complex<T> {
    let w = omega(frequency_hz);
    let r = p.loss_resistance_ohm(frequency_hz);
    let m = p.mutual_inductance_h();
    let branch = match mode {
        PortMode::Single => {
            let wm = w * m;
            Complex::new(r, w * p.inductance_h) + Complex::new(wm * wm, T::zero()) / loop_impedance(p, frequency_hz)
        }
        PortMode::Dual => Complex::new(r, w * (p.inductance_h + m)),
    };
    let zc = cap_impedance(w, p.capacitance_f);
    zc * branch / (zc + branch)
}

pub fn input_impedance<T: Scalar>(p: &CircuitParams<T>, frequency_hz: T, mode: PortMode) -> Complex<T> {
    cap_impedance(omega(frequency_hz), p.feed_capacitance_f) + gap_impedance(p, frequency_hz, mode)
}

/// Reflection coefficient at port 1 against the line impedance.
pub fn s11<T: Scalar>(p: &CircuitParams<T>, frequency_hz: T, mode: PortMode) -> Complex<T> {
    let z = input_impedance(p, frequency_hz, mode);
    let z0 = Complex::new(p.line_impedance_ohm, T::zero());
    (z - z0) / (z + z0)
}

pub fn s11_spectrum<T: Scalar>(p: &CircuitParams<T>, freqs_hz: &[T], mode: PortMode) -> Vec<Complex<T>> {
    freqs_hz.par_iter().map(|&f| s11(p, f, mode)).collect()
}

/// Ring currents for series sources in each loop, scaled so the sources
/// deliver `power_w` in total. In single mode only loop 1 carries a source.
pub fn solve_currents<T: Scalar>(
    p: &CircuitParams<T>,
    frequency_hz: T,
    mode: PortMode,
    power_w: T,
) -> Result<DriveState<T>, CircuitError> {
    if !(frequency_hz > T::zero()) || !frequency_hz.is_finite() {
        return Err(CircuitError::InvalidArgument(format!(
            "drive frequency must be positive (got {frequency_hz})"
        )));
    }
    if !(power_w >= T::zero()) || !power_w.is_finite() {
        return Err(CircuitError::InvalidArgument(format!(
            "drive power must be non-negative (got {power_w})"
        )));
    }
    let z = loop_impedance(p, frequency_hz);
    let zm = Complex::new(T::zero(), omega(frequency_hz) * p.mutual_inductance_h());
    let det = z * z - zm * zm;
    let scale = z.norm_sqr() + zm.norm_sqr();
    if !(det.norm() > T::solver_tol() * T::lit(1e-2) * scale) {
        return Err(CircuitError::SingularSystem {
            frequency_hz: frequency_hz.as_f64(),
        });
    }
    let one = Complex::new(T::one(), T::zero());
    let v2 = match mode {
        PortMode::Single => Complex::new(T::zero(), T::zero()),
        PortMode::Dual => one,
    };
    let i1 = (one * z - zm * v2) / det;
    let i2 = (v2 * z - zm * one) / det;
    let delivered = (one * i1.conj() + v2 * i2.conj()).re / T::lit(2.0);
    if !(delivered > T::zero()) {
        return Err(CircuitError::SingularSystem {
            frequency_hz: frequency_hz.as_f64(),
        });
    }
    let s = (power_w / delivered).sqrt();
    Ok(DriveState {
        frequency_hz,
        i1: i1 * s,
        i2: i2 * s,
        mode,
        power_w: Some(power_w),
    })
}

/// Outcome of matching the feed capacitance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedMatch<T> {
    pub capacitance_f: T,
    /// Frequency where the port is matched.
    pub matched_hz: T,
    /// Unloaded symmetric-mode frequency.
    pub symmetric_hz: T,
    /// Peak of `Re Z_gap` near the symmetric mode.
    pub peak_resistance_ohm: T,
}

impl<T: Scalar> FeedMatch<T> {
    /// Relative shift of the matched frequency from the unloaded mode.
    pub fn pull(&self) -> T {
        self.matched_hz / self.symmetric_hz - T::one()
    }
}

fn refine_peak<T, F>(mut g: F, lo: T, hi: T, n: usize) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let step = (hi - lo) / T::from_count(n - 1);
    let mut best = (0usize, T::neg_infinity());
    for i in 0..n {
        let v = g(lo + step * T::from_count(i));
        if v > best.1 {
            best = (i, v);
        }
    }
    let a = lo + step * T::from_count(best.0.saturating_sub(1));
    let b = lo + step * T::from_count((best.0 + 1).min(n - 1));
    golden_max(g, a, b, T::solver_tol() * a, 200)
}

/// Chooses `C_f` so the port is matched on the low side of the symmetric
/// mode: `Re Z_gap = Z0` there and `C_f` cancels the remaining reactance.
pub fn tune_feed<T: Scalar>(
    p: &CircuitParams<T>,
    mode: PortMode,
) -> Result<(CircuitParams<T>, FeedMatch<T>), CircuitError> {
    let fs = eigenmodes(p).symmetric_hz;
    let re = |f: T| gap_impedance(p, f, mode).re;
    let lo = fs * T::lit(0.85);
    let (f_peak, r_peak) = refine_peak(re, lo, fs * T::lit(1.1), 2001);
    let z0 = p.line_impedance_ohm;
    if !(r_peak > z0) {
        return Err(CircuitError::FeedMatch(format!(
            "gap resistance peaks at {r_peak} ohm, below the {z0} ohm line"
        )));
    }
    if !(re(lo) < z0) {
        return Err(CircuitError::FeedMatch(
            "gap resistance exceeds the line impedance across the search window".into(),
        ));
    }
    let f_match = brent(|f| re(f) - z0, lo, f_peak, T::solver_tol() * T::solver_tol() * fs, 200)
        .map_err(|e| CircuitError::FeedMatch(e.to_string()))?;
    let x = gap_impedance(p, f_match, mode).im;
    if !(x > T::zero()) {
        return Err(CircuitError::FeedMatch(format!(
            "gap reactance at the match point is not inductive ({x} ohm)"
        )));
    }
    let c_f = T::one() / (omega(f_match) * x);
    let tuned = CircuitParams::new(
        p.inductance_h,
        p.capacitance_f,
        p.unloaded_q,
        p.coupling,
        c_f,
        p.line_impedance_ohm,
    )?;
    Ok((
        tuned,
        FeedMatch {
            capacitance_f: c_f,
            matched_hz: f_match,
            symmetric_hz: fs,
            peak_resistance_ohm: r_peak,
        },
    ))
}

/// Loaded resonance parameters read off the absorbed power `1 - |S11|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport<T> {
    pub peak_hz: T,
    pub min_s11: T,
    pub lower_hz: T,
    pub upper_hz: T,
    pub bandwidth_hz: T,
    pub loaded_q: T,
}

/// Finds the absorption peak within +-8% of `center_hz` and its half-power width.
pub fn q_and_bandwidth<T: Scalar>(
    p: &CircuitParams<T>,
    mode: PortMode,
    center_hz: T,
) -> Result<QualityReport<T>, CircuitError> {
    let absorbed = |f: T| T::one() - s11(p, f, mode).norm_sqr();
    let lo = center_hz * T::lit(0.92);
    let hi = center_hz * T::lit(1.08);
    let (f_peak, a_peak) = refine_peak(absorbed, lo, hi, 1601);
    let no_res = |reason: &str| CircuitError::NoResonance {
        frequency_hz: center_hz.as_f64(),
        reason: reason.into(),
    };
    if !(a_peak > T::lit(1e-6)) {
        return Err(no_res("no absorption in the window"));
    }
    let half = a_peak / T::lit(2.0);
    let h = |f: T| absorbed(f) - half;
    if !(h(lo) < T::zero()) || !(h(hi) < T::zero()) {
        return Err(no_res("half-power points fall outside the window"));
    }
    let tol = T::solver_tol() * T::solver_tol() * center_hz;
    let lower = brent(h, lo, f_peak, tol, 200).map_err(|e| no_res(&e.to_string()))?;
    let upper = brent(h, f_peak, hi, tol, 200).map_err(|e| no_res(&e.to_string()))?;
    let bw = upper - lower;
    Ok(QualityReport {
        peak_hz: f_peak,
        min_s11: (T::one() - a_peak).max(T::zero()).sqrt(),
        lower_hz: lower,
        upper_hz: upper,
        bandwidth_hz: bw,
        loaded_q: f_peak / bw,
    })
}

/// Locates the loaded absorption peak below the antisymmetric mode and
/// measures its width.
pub fn loaded_resonance<T: Scalar>(
    p: &CircuitParams<T>,
    mode: PortMode,
) -> Result<QualityReport<T>, CircuitError> {
    let fs = eigenmodes(p).symmetric_hz;
    let absorbed = |f: T| T::one() - s11(p, f, mode).norm_sqr();
    let (f_peak, _) = refine_peak(absorbed, fs * T::lit(0.8), fs * T::lit(1.05), 2001);
    q_and_bandwidth(p, mode, f_peak)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(q: f64, k: f64) -> CircuitParams<f64> {
        let l = 9.22e-9;
        let f0 = 3.2e9;
        let c = 1.0 / ((std::f64::consts::TAU * f0).powi(2) * l);
        CircuitParams::new(l, c, q, k, 4e-14, 50.0).unwrap()
    }

    #[test]
    fn currents_deliver_requested_power() {
        let p = ring(220.0, 0.22);
        let f = eigenmodes(&p).symmetric_hz;
        for mode in [PortMode::Single, PortMode::Dual] {
            let s = solve_currents(&p, f, mode, 2.0).unwrap();
            let r = p.loss_resistance_ohm(f);
            let dissipated = 0.5 * r * (s.i1.norm_sqr() + s.i2.norm_sqr());
            assert!((dissipated - 2.0).abs() < 1e-9, "{mode}: {dissipated}");
        }
    }

    #[test]
    fn dual_currents_are_equal_and_single_in_phase_at_symmetric_mode() {
        let p = ring(220.0, 0.22);
        let f = eigenmodes(&p).symmetric_hz;
        let d = solve_currents(&p, f, PortMode::Dual, 1.0).unwrap();
        assert!((d.i1 - d.i2).norm() < 1e-12 * d.i1.norm());
        let s = solve_currents(&p, f, PortMode::Single, 1.0).unwrap();
        let ratio = s.i2 / s.i1;
        assert!(ratio.re > 0.9 && ratio.im.abs() < 0.1, "{ratio}");
    }

    #[test]
    fn lossless_symmetric_mode_is_singular() {
        let p = ring(f64::INFINITY, 0.22);
        let f = eigenmodes(&p).symmetric_hz;
        assert!(matches!(
            solve_currents(&p, f, PortMode::Single, 1.0),
            Err(CircuitError::SingularSystem { .. })
        ));
    }

    #[test]
    fn invalid_drive_rejected() {
        let p = ring(220.0, 0.22);
        assert!(solve_currents(&p, -1.0, PortMode::Dual, 1.0).is_err());
        assert!(solve_currents(&p, 3e9, PortMode::Dual, -1.0).is_err());
    }

    #[test]
    fn tuned_feed_matches_port() {
        let p = ring(220.0, 0.22);
        for mode in [PortMode::Single, PortMode::Dual] {
            let (t, m) = tune_feed(&p, mode).unwrap();
            assert!(s11(&t, m.matched_hz, mode).norm() < 1e-6);
            assert!(m.pull() < 0.0 && m.pull() > -0.1);
        }
    }

    #[test]
    fn passive_reflection() {
        let (p, _) = tune_feed(&ring(220.0, 0.22), PortMode::Single).unwrap();
        for i in 0..200 {
            let f = 2.0e9 + 1e7 * i as f64;
            assert!(s11(&p, f, PortMode::Single).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn critically_coupled_q_is_half_mode_q() {
        let k = 0.22;
        let (p, m) = tune_feed(&ring(220.0, k), PortMode::Dual).unwrap();
        let q = q_and_bandwidth(&p, PortMode::Dual, m.matched_hz).unwrap();
        let mode_q = 220.0 * (1.0 + k);
        assert!((q.loaded_q / (mode_q / 2.0) - 1.0).abs() < 0.1, "{}", q.loaded_q);
        assert!(q.min_s11 < 1e-3);
    }

    #[test]
    fn weak_feed_approaches_mode_q() {
        let k = 0.22;
        let p = ring(220.0, k).with_feed_capacitance(2e-15);
        let f = eigenmodes(&p).symmetric_hz;
        let q = q_and_bandwidth(&p, PortMode::Dual, f).unwrap();
        assert!((q.loaded_q / (220.0 * (1.0 + k)) - 1.0).abs() < 0.05, "{}", q.loaded_q);
    }
}
