use crate::numeric::{golden_max, levenberg_marquardt, LmFit, LmOptions};
use crate::Scalar;

use super::{noise_estimate, MetrologyError, TimeTrace};

/// Decay times beyond this many trace spans are reported at the bound.
pub const DECAY_BOUND_SPANS: f64 = 1e3;

/// `offset + amplitude * exp(-t / decay) * cos(2 pi f t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiParams<T> {
    pub frequency_hz: T,
    pub decay_time_s: T,
    pub amplitude: T,
    pub offset: T,
    pub phase_rad: T,
}

pub fn rabi_model<T: Scalar>(p: &RabiParams<T>, t: T) -> T {
    p.offset
        + p.amplitude * (-t / p.decay_time_s).exp() * (T::TAU() * p.frequency_hz * t + p.phase_rad).cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiFit<T> {
    pub params: RabiParams<T>,
    /// One-sigma uncertainties; `None` when the covariance is unavailable.
    pub uncertainty: Option<RabiParams<T>>,
    pub residual_rms: T,
    /// The decay was indistinguishable from none and is reported at the bound.
    pub decay_at_bound: bool,
}

fn periodogram<T: Scalar>(t: &[T], y: &[T], nu: T) -> (T, T) {
    let w = T::TAU() * nu;
    let (mut re, mut im) = (T::zero(), T::zero());
    for (&ti, &yi) in t.iter().zip(y) {
        let (s, c) = (w * ti).sin_cos();
        re += yi * c;
        im -= yi * s;
    }
    (re, im)
}

fn power_at<T: Scalar>(t: &[T], y: &[T], nu: T) -> T {
    let (re, im) = periodogram(t, y, nu);
    re * re + im * im
}

fn peak_frequency<T: Scalar>(t: &[T], y: &[T]) -> T {
    let n = t.len();
    let nu_max = T::from_count(n - 1) / T::lit(2.0);
    let step = T::lit(0.1);
    let mut best = (T::zero(), T::neg_infinity());
    let mut nu = step;
    while nu <= nu_max {
        let p = power_at(t, y, nu);
        if p > best.1 {
            best = (nu, p);
        }
        nu += step;
    }
    let lo = (best.0 - step).max(step / T::lit(10.0));
    golden_max(|v| power_at(t, y, v), lo, best.0 + step, T::lit(1e-10), 200).0
}

fn amplitude_at<T: Scalar>(t: &[T], y: &[T], nu: T) -> (T, T) {
    let (re, im) = periodogram(t, y, nu);
    let n = T::from_count(t.len());
    (T::lit(2.0) * (re * re + im * im).sqrt() / n, im.atan2(re))
}

fn residuals<'a, T: Scalar>(t: &'a [T], y: &'a [T]) -> impl FnMut(&[T], &mut Vec<T>) + 'a {
    move |p: &[T], out: &mut Vec<T>| {
        out.clear();
        let w = T::TAU() * p[3];
        for (&ti, &yi) in t.iter().zip(y) {
            out.push(p[0] + p[1] * (-p[2] * ti).exp() * (w * ti + p[4]).cos() - yi);
        }
    }
}

/// Fits a damped cosine. The frequency seed is the periodogram peak; up to
/// five restarts perturb the decay and frequency seeds.
pub fn fit_rabi<T: Scalar>(trace: &TimeTrace<T>) -> Result<RabiFit<T>, MetrologyError> {
    trace.require_fit_size()?;
    let t0 = trace.times()[0];
    let span = trace.span();
    let n = T::from_count(trace.len());
    let mean = trace.values().iter().copied().sum::<T>() / n;
    let dev = (trace.values().iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / n).sqrt();
    let magnitude = trace.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(dev > magnitude * T::epsilon() * T::lit(1e3)) || dev == T::zero() {
        return Err(MetrologyError::InsufficientOscillations("trace is constant".into()));
    }
    let t: Vec<T> = trace.times().iter().map(|&ti| (ti - t0) / span).collect();
    let y: Vec<T> = trace.values().iter().map(|&v| (v - mean) / dev).collect();

    let nu0 = peak_frequency(&t, &y);
    if nu0 < T::lit(2.0) {
        return Err(MetrologyError::InsufficientOscillations(format!(
            "dominant frequency spans only {:.2} periods",
            nu0.as_f64()
        )));
    }
    let (a0, phi0) = amplitude_at(&t, &y, nu0);

    let half = t.partition_point(|&v| v < T::lit(0.5));
    let g0 = if half >= 4 && t.len() - half >= 4 {
        let (a1, _) = amplitude_at(&t[..half], &y[..half], nu0);
        let (a2, _) = amplitude_at(&t[half..], &y[half..], nu0);
        let ratio = a1 / a2 * T::from_count(half) / T::from_count(t.len() - half);
        (T::lit(2.0) * ratio.ln()).max(T::zero()).min(T::lit(50.0))
    } else {
        T::zero()
    };

    let noise = noise_estimate(&y);
    let floor = T::lit(5.0) * noise + T::epsilon().sqrt();
    let opts = LmOptions::default();
    let seeds = [
        (g0, nu0),
        (T::zero(), nu0),
        (g0 * T::lit(3.0) + T::one(), nu0),
        (g0 * T::lit(0.3), nu0 * (T::one() + T::lit(0.5) / nu0)),
        (g0 * T::lit(0.3), nu0 * (T::one() - T::lit(0.5) / nu0)),
        (T::lit(10.0), nu0),
    ];
    let mut best: Option<LmFit<T>> = None;
    for (g, nu) in seeds {
        let a_seed = a0 * (g / T::lit(2.0)).exp().min(T::lit(20.0));
        let fit = levenberg_marquardt(residuals(&t, &y), &[T::zero(), a_seed, g, nu, phi0], &opts);
        if !fit.ssr.is_finite() {
            continue;
        }
        let good = fit.converged && fit.residual_rms <= floor;
        if best.as_ref().is_none_or(|b| fit.ssr < b.ssr) {
            best = Some(fit);
        }
        if good {
            break;
        }
    }
    let fit = best.ok_or_else(|| MetrologyError::FitDiverged("no finite fit".into()))?;
    if !(fit.residual_rms <= floor) {
        return Err(MetrologyError::FitDiverged(format!(
            "residual rms {:.3e} exceeds 5x the noise estimate {:.3e}",
            fit.residual_rms.as_f64(),
            noise.as_f64()
        )));
    }

    let mut p = fit.params.clone();
    if p[1] < T::zero() {
        p[1] = -p[1];
        p[4] += T::PI();
    }
    if !(p[3] > T::zero()) {
        return Err(MetrologyError::FitDiverged("non-positive frequency".into()));
    }
    let bound = T::lit(DECAY_BOUND_SPANS);
    let decay_at_bound = p[2] <= T::one() / bound;
    let decay_time_s = if decay_at_bound { bound * span } else { span / p[2] };
    let envelope = if decay_at_bound { T::one() } else { (t0 / decay_time_s).exp() };
    let frequency_hz = p[3] / span;
    let mut phase = p[4] - T::TAU() * frequency_hz * t0;
    phase = phase - T::TAU() * ((phase + T::PI()) / T::TAU()).floor();

    let params = RabiParams {
        frequency_hz,
        decay_time_s,
        amplitude: p[1] * dev * envelope,
        offset: mean + p[0] * dev,
        phase_rad: phase,
    };
    let sig = |i: usize| fit.sigma(i);
    let uncertainty = match (sig(0), sig(1), sig(2), sig(3), sig(4)) {
        (Some(c), Some(a), Some(g), Some(nu), Some(ph)) => Some(RabiParams {
            frequency_hz: nu / span,
            decay_time_s: if decay_at_bound { T::infinity() } else { g / (p[2] * p[2]) * span },
            amplitude: a * dev * envelope,
            offset: c * dev,
            phase_rad: ph,
        }),
        _ => None,
    };
    Ok(RabiFit {
        params,
        uncertainty,
        residual_rms: fit.residual_rms * dev,
        decay_at_bound,
    })
}
