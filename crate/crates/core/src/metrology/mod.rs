//! Fits of characterization traces and the Rabi / field / power conversions.

mod rabi;
mod resonance;
mod ringdown;

use thiserror::Error;

use crate::constants::GAMMA_NV_HZ_PER_T;
use crate::constants::GAUSS_PER_TESLA;
use crate::Scalar;

pub use rabi::{fit_rabi, rabi_model, RabiFit, RabiParams};
pub use resonance::{fit_s11_dip, ResonanceFit};
pub use ringdown::{fit_ringdown, ringdown_model, RingdownDirection, RingdownFit};

/// Minimum number of samples accepted by any fit.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetrologyError {
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("trace has {got} points, fits need at least {MIN_FIT_POINTS}")]
    TooFewPoints { got: usize },
    #[error("insufficient oscillations: {0}")]
    InsufficientOscillations(String),
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("no dip found: {0}")]
    NoDipFound(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Sampled signal; times strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace<T> {
    times: Vec<T>,
    values: Vec<T>,
    uniform: bool,
}

impl<T: Scalar> TimeTrace<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self, MetrologyError> {
        if times.len() != values.len() {
            return Err(MetrologyError::InvalidTrace(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(MetrologyError::InvalidTrace("non-finite sample".into()));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(MetrologyError::InvalidTrace(format!(
                "times not strictly increasing at index {}",
                i + 1
            )));
        }
        let uniform = match (times.first(), times.last()) {
            (Some(&a), Some(&b)) if times.len() > 2 => {
                let dt = (b - a) / T::from_count(times.len() - 1);
                times
                    .windows(2)
                    .all(|w| ((w[1] - w[0]) - dt).abs() <= dt * T::lit(1e-6))
            }
            _ => true,
        };
        Ok(Self {
            times,
            values,
            uniform,
        })
    }

    pub fn from_pairs(pairs: &[(T, T)]) -> Result<Self, MetrologyError> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn span(&self) -> T {
        match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => b - a,
            _ => T::zero(),
        }
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| *v * k).collect(),
            uniform: self.uniform,
        }
    }

    pub(crate) fn require_fit_size(&self) -> Result<(), MetrologyError> {
        if self.len() < MIN_FIT_POINTS {
            return Err(MetrologyError::TooFewPoints { got: self.len() });
        }
        Ok(())
    }
}

/// Noise level from second differences, robust to smooth signals.
pub(crate) fn noise_estimate<T: Scalar>(values: &[T]) -> T {
    if values.len() < 3 {
        return T::zero();
    }
    let d2: T = values
        .windows(3)
        .map(|w| {
            let d = w[0] - T::lit(2.0) * w[1] + w[2];
            d * d
        })
        .sum();
    (d2 / T::from_count(values.len() - 2) / T::lit(6.0)).sqrt()
}

/// Field amplitude for a Rabi frequency, `B = f / gamma_NV`, gauss.
pub fn rabi_to_field<T: Scalar>(f_rabi_hz: T) -> Result<T, MetrologyError> {
    if !(f_rabi_hz >= T::zero()) {
        return Err(MetrologyError::DegenerateInput(format!(
            "Rabi frequency must be non-negative (got {f_rabi_hz})"
        )));
    }
    Ok(f_rabi_hz / T::lit(GAMMA_NV_HZ_PER_T) * T::lit(GAUSS_PER_TESLA))
}

/// Rabi frequency for a field amplitude in gauss.
pub fn field_to_rabi<T: Scalar>(field_gauss: T) -> T {
    field_gauss / T::lit(GAUSS_PER_TESLA) * T::lit(GAMMA_NV_HZ_PER_T)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRatioFit<T> {
    /// G per sqrt(W).
    pub ratio: T,
    /// RMS residual of the field, gauss.
    pub residual_rms: T,
}

impl<T: Scalar> PowerRatioFit<T> {
    /// Rabi frequency expected at `power_w` from the fitted ratio.
    pub fn predicted_rabi_hz(&self, power_w: T) -> T {
        field_to_rabi(self.ratio * power_w.sqrt())
    }
}

/// Zero-intercept least-squares slope of field against sqrt(power).
/// Points are `(power_w, field_gauss)`.
pub fn fit_power_ratio<T: Scalar>(points: &[(T, T)]) -> Result<PowerRatioFit<T>, MetrologyError> {
    if points.len() < 2 {
        return Err(MetrologyError::DegenerateInput(format!(
            "need at least 2 points (got {})",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.0 > T::zero()) || !p.1.is_finite()) {
        return Err(MetrologyError::DegenerateInput("powers must be positive".into()));
    }
    let p0 = points[0].0;
    if points.iter().all(|p| p.0 == p0) {
        return Err(MetrologyError::DegenerateInput("all powers are equal".into()));
    }
    let sxy: T = points.iter().map(|p| p.0.sqrt() * p.1).sum();
    let sxx: T = points.iter().map(|p| p.0).sum();
    let ratio = sxy / sxx;
    let ss: T = points
        .iter()
        .map(|p| {
            let r = p.1 - ratio * p.0.sqrt();
            r * r
        })
        .sum();
    Ok(PowerRatioFit {
        ratio,
        residual_rms: (ss / T::from_count(points.len())).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rabi_field_conversion() {
        assert!((rabi_to_field(17.2e6_f64).unwrap() - 6.142857).abs() < 1e-5);
        assert_eq!(rabi_to_field(0.0_f64).unwrap(), 0.0);
        assert!((rabi_to_field(2.8e6_f64).unwrap() - 1.0).abs() < 1e-12);
        assert!(rabi_to_field(-1.0_f64).is_err());
        assert!((field_to_rabi(6.0_f64) - 16.8e6).abs() < 1e-6);
    }

    #[test]
    fn power_ratio_examples() {
        let r = fit_power_ratio(&[(1.0_f64, 2.0), (4.0, 4.0), (9.0, 6.0)]).unwrap();
        assert!((r.ratio - 2.0).abs() < 1e-12);
        assert!(r.residual_rms < 1e-12);
        let s = fit_power_ratio(&[(1.0_f64, 1.5), (4.0, 3.0)]).unwrap();
        assert!((s.ratio - 1.5).abs() < 1e-12);
        assert!(matches!(
            fit_power_ratio(&[(2.0_f64, 1.0), (2.0, 1.1)]),
            Err(MetrologyError::DegenerateInput(_))
        ));
        assert!(fit_power_ratio(&[(1.0_f64, 1.0)]).is_err());
    }

    #[test]
    fn trace_validation() {
        assert!(TimeTrace::new(vec![0.0, 1.0, 1.0], vec![0.0; 3]).is_err());
        assert!(TimeTrace::new(vec![0.0, 1.0], vec![0.0]).is_err());
        let t = TimeTrace::new(vec![0.0, 1.0, 2.0, 4.0], vec![0.0; 4]).unwrap();
        assert!(!t.is_uniform());
        let u = TimeTrace::new((0..10).map(f64::from).collect(), vec![1.0; 10]).unwrap();
        assert!(u.is_uniform());
    }

    #[test]
    fn noise_estimate_of_white_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = Normal::new(0.0, 0.3).unwrap();
        let v: Vec<f64> = (0..20000).map(|_| n.sample(&mut rng)).collect();
        assert!((noise_estimate(&v) / 0.3 - 1.0).abs() < 0.03);
    }
}
