use crate::numeric::{levenberg_marquardt, LmOptions};
use crate::Scalar;

use super::{MetrologyError, MIN_FIT_POINTS};

/// Lorentzian dip fitted to a reflection trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceFit<T> {
    pub f0_hz: T,
    pub q_loaded: T,
    /// Off-resonance level over the dip floor, dB (positive).
    pub depth_db: T,
    pub fwhm_hz: T,
    pub f0_sigma_hz: Option<T>,
    pub q_sigma: Option<T>,
    pub residual_rms: T,
}

/// Fits `|S11|^2 = b - a / (1 + ((f - f0) / h)^2)` to `(freq_hz, s11_db)`
/// points, giving `Q = f0 / (2 h)`.
pub fn fit_s11_dip<T: Scalar>(points: &[(T, T)]) -> Result<ResonanceFit<T>, MetrologyError> {
    if points.len() < MIN_FIT_POINTS {
        return Err(MetrologyError::TooFewPoints { got: points.len() });
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(MetrologyError::InvalidTrace("non-finite sample".into()));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(MetrologyError::InvalidTrace("frequencies not strictly increasing".into()));
    }
    let ten = T::lit(10.0);
    let power: Vec<T> = points.iter().map(|p| ten.powf(p.1 / ten)).collect();
    let (imin, &pmin) = power
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let pmax = power.iter().copied().fold(T::neg_infinity(), T::max);
    if !(pmax - pmin > pmax * T::lit(1e-6)) {
        return Err(MetrologyError::NoDipFound("trace is flat".into()));
    }
    if imin == 0 || imin + 1 == power.len() {
        return Err(MetrologyError::NoDipFound("minimum lies at the edge of the scan".into()));
    }

    let f_lo = points[0].0;
    let f_hi = points[points.len() - 1].0;
    let mid = (f_lo + f_hi) / T::lit(2.0);
    let half_span = (f_hi - f_lo) / T::lit(2.0);
    let x: Vec<T> = points.iter().map(|p| (p.0 - mid) / half_span).collect();
    let y: Vec<T> = power.iter().map(|&v| v / pmax).collect();
    let y_min = pmin / pmax;

    let level = (T::one() + y_min) / T::lit(2.0);
    let left = (0..imin).rev().find(|&i| y[i] >= level).unwrap_or(0);
    let right = (imin..y.len()).find(|&i| y[i] >= level).unwrap_or(y.len() - 1);
    let h0 = ((x[right] - x[left]) / T::lit(2.0)).max(T::lit(1e-6));

    let residuals = |p: &[T], out: &mut Vec<T>| {
        out.clear();
        for (&xi, &yi) in x.iter().zip(&y) {
            let u = (xi - p[2]) / p[3];
            out.push(p[0] - p[1] / (T::one() + u * u) - yi);
        }
    };
    let opts = LmOptions::default();
    let mut best = None;
    for scale in [T::one(), T::lit(0.5), T::lit(2.0), T::lit(0.2), T::lit(5.0)] {
        let fit = levenberg_marquardt(residuals, &[T::one(), T::one() - y_min, x[imin], h0 * scale], &opts);
        let ok = fit.ssr.is_finite() && fit.params[3] != T::zero();
        if ok && best.as_ref().is_none_or(|b: &crate::numeric::LmFit<T>| fit.ssr < b.ssr) {
            let done = fit.converged;
            best = Some(fit);
            if done {
                break;
            }
        }
    }
    let fit = best.ok_or_else(|| MetrologyError::FitDiverged("no finite dip fit".into()))?;
    let p = &fit.params;
    let h = p[3].abs();
    if !(p[1] > T::zero()) {
        return Err(MetrologyError::NoDipFound("fitted Lorentzian is a peak".into()));
    }
    let f0 = mid + p[2] * half_span;
    if !(f0 > f_lo && f0 < f_hi) {
        return Err(MetrologyError::NoDipFound("fitted centre lies outside the scan".into()));
    }
    let fwhm = T::lit(2.0) * h * half_span;
    let floor = p[0] - p[1];
    let depth_db = if floor > T::zero() {
        ten * (p[0] / floor).log10()
    } else {
        T::infinity()
    };
    let q = f0 / fwhm;
    let q_sigma = match (fit.sigma(2), fit.sigma(3)) {
        (Some(s0), Some(sh)) => {
            let rel_f = s0 * half_span / f0;
            let rel_h = sh / h;
            Some(q * (rel_f * rel_f + rel_h * rel_h).sqrt())
        }
        _ => None,
    };
    Ok(ResonanceFit {
        f0_hz: f0,
        q_loaded: q,
        depth_db,
        fwhm_hz: fwhm,
        f0_sigma_hz: fit.sigma(2).map(|s| s * half_span),
        q_sigma,
        residual_rms: fit.residual_rms * pmax,
    })
}
