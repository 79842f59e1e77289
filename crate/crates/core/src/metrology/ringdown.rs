use crate::numeric::{levenberg_marquardt, LmOptions};
use crate::Scalar;

use super::{MetrologyError, TimeTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingdownDirection {
    /// `A (1 - exp(-t / tau))`.
    BuildUp,
    /// `A exp(-t / tau)`.
    Decay,
}

pub fn ringdown_model<T: Scalar>(direction: RingdownDirection, amplitude: T, tau_s: T, t: T) -> T {
    match direction {
        RingdownDirection::BuildUp => amplitude * (T::one() - (-t / tau_s).exp()),
        RingdownDirection::Decay => amplitude * (-t / tau_s).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingdownFit<T> {
    pub tau_s: T,
    pub tau_sigma_s: T,
    pub amplitude: T,
    pub direction: RingdownDirection,
    pub residual_rms: T,
    /// Relative uncertainty above 50%.
    pub poorly_constrained: bool,
    /// Trace shorter than three time constants.
    pub short_trace: bool,
}

/// Fits a single-exponential build-up or decay, choosing the direction from
/// the trend between the first and last tenth of the trace. Times are
/// measured from the switching instant at `t = 0`.
pub fn fit_ringdown<T: Scalar>(trace: &TimeTrace<T>) -> Result<RingdownFit<T>, MetrologyError> {
    trace.require_fit_size()?;
    let n = trace.len();
    let tenth = (n / 10).max(2);
    let avg = |s: &[T]| s.iter().copied().sum::<T>() / T::from_count(s.len());
    let vals = trace.values();
    let head = avg(&vals[..tenth]);
    let tail = avg(&vals[n - tenth..]);
    let scale = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(scale > T::zero()) || !((tail - head).abs() > scale * T::lit(1e-9)) {
        return Err(MetrologyError::FitDiverged("trace shows no transient".into()));
    }
    let direction = if tail.abs() > head.abs() {
        RingdownDirection::BuildUp
    } else {
        RingdownDirection::Decay
    };
    let t_end = *trace.times().last().unwrap();
    if !(t_end > T::zero()) {
        return Err(MetrologyError::InvalidTrace("trace must extend past t = 0".into()));
    }
    let t: Vec<T> = trace.times().iter().map(|&v| v / t_end).collect();
    let y: Vec<T> = vals.iter().map(|&v| v / scale).collect();

    // Log-linear seed on the part of the curve well away from its asymptote.
    let (a0, level): (T, Box<dyn Fn(T) -> T>) = match direction {
        RingdownDirection::BuildUp => {
            let a = tail / scale;
            (a, Box::new(move |v: T| T::one() - v / a))
        }
        RingdownDirection::Decay => {
            let a = y.iter().copied().fold(T::zero(), |m, v| if v.abs() > m.abs() { v } else { m });
            (a, Box::new(move |v: T| v / a))
        }
    };
    let pts: Vec<(T, T)> = t
        .iter()
        .zip(&y)
        .filter_map(|(&ti, &yi)| {
            let l = level(yi);
            (l > T::lit(0.1) && l < T::lit(0.9)).then(|| (ti, l.ln()))
        })
        .collect();
    let tau0 = if pts.len() >= 2 {
        let m = T::from_count(pts.len());
        let mx = pts.iter().map(|p| p.0).sum::<T>() / m;
        let my = pts.iter().map(|p| p.1).sum::<T>() / m;
        let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        if slope < T::zero() { -T::one() / slope } else { T::lit(0.3) }
    } else {
        T::lit(0.3)
    };

    let residuals = |p: &[T], out: &mut Vec<T>| {
        out.clear();
        for (&ti, &yi) in t.iter().zip(&y) {
            out.push(ringdown_model(direction, p[0], p[1], ti) - yi);
        }
    };
    let opts = LmOptions::default();
    let mut best: Option<crate::numeric::LmFit<T>> = None;
    for k in [T::one(), T::lit(0.5), T::lit(2.0), T::lit(0.25), T::lit(4.0)] {
        let fit = levenberg_marquardt(residuals, &[a0, tau0 * k], &opts);
        if !fit.ssr.is_finite() || !(fit.params[1] > T::zero()) {
            continue;
        }
        let done = fit.converged;
        if best.as_ref().is_none_or(|b| fit.ssr < b.ssr) {
            best = Some(fit);
        }
        if done {
            break;
        }
    }
    let fit = best.ok_or_else(|| MetrologyError::FitDiverged("no finite fit with positive tau".into()))?;
    if !fit.converged {
        return Err(MetrologyError::FitDiverged("least squares did not converge".into()));
    }
    let tau = fit.params[1] * t_end;
    let tau_sigma = fit.sigma(1).map(|s| s * t_end).unwrap_or(T::infinity());
    Ok(RingdownFit {
        tau_s: tau,
        tau_sigma_s: tau_sigma,
        amplitude: fit.params[0] * scale,
        direction,
        residual_rms: fit.residual_rms * scale,
        poorly_constrained: !(tau_sigma <= tau * T::lit(0.5)),
        short_trace: t_end < tau * T::lit(3.0),
    })
}
