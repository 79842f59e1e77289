use rayon::prelude::*;

use crate::circuit::CircuitOptions;
use crate::geometry::{DesignParameter, ResonatorGeometry, ValidatedGeometry};
use crate::Scalar;

use super::{evaluate_design, evaluate_modes, DesignError, DesignPoint, EvaluationSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T> {
    pub parameter: DesignParameter,
    pub start_mm: T,
    /// Inclusive.
    pub stop_mm: T,
    pub count: usize,
    pub base: ResonatorGeometry<T>,
}

impl<T: Scalar> SweepSpec<T> {
    pub fn values(&self) -> Result<Vec<T>, DesignError> {
        if self.count < 3 {
            return Err(DesignError::InvalidSweep(format!(
                "need at least 3 samples (got {})",
                self.count
            )));
        }
        if !self.start_mm.is_finite() || !self.stop_mm.is_finite() {
            return Err(DesignError::InvalidSweep("range must be finite".into()));
        }
        if self.start_mm == self.stop_mm {
            return Err(DesignError::InvalidSweep("zero-length range".into()));
        }
        let step = (self.stop_mm - self.start_mm) / T::from_count(self.count - 1);
        Ok((0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop_mm
                } else {
                    self.start_mm + step * T::from_count(i)
                }
            })
            .collect())
    }
}

/// One sweep sample; failures keep their row with the error text.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub parameter: DesignParameter,
    pub value_mm: T,
    pub outcome: Result<DesignPoint<T>, String>,
}

pub fn sweep<T: Scalar>(
    spec: &SweepSpec<T>,
    settings: &EvaluationSettings<T>,
) -> Result<Vec<SweepRow<T>>, DesignError> {
    spec.base.validate()?;
    let values = spec.values()?;
    Ok(values
        .into_par_iter()
        .map(|v| {
            let outcome = spec
                .base
                .with_parameter(spec.parameter, v)
                .validate()
                .map_err(DesignError::from)
                .and_then(|g| evaluate_design(&g, settings))
                .map_err(|e| e.to_string());
            SweepRow {
                parameter: spec.parameter,
                value_mm: v,
                outcome,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult<T> {
    pub parameter: DesignParameter,
    /// Slope of `f_sym`, MHz per mm.
    pub slope_mhz_per_mm: T,
    /// RMS deviation of the samples from the fitted line, MHz.
    pub residual_mhz: T,
    /// `(value_mm, f_sym_mhz)` pairs.
    pub samples: Vec<(T, T)>,
}

/// Least-squares slope of `f_sym` through five points spanning +-5% of the base value.
pub fn resonance_sensitivity<T: Scalar>(
    base: &ValidatedGeometry<T>,
    parameter: DesignParameter,
    opts: &CircuitOptions<T>,
) -> Result<SensitivityResult<T>, DesignError> {
    let x0 = base.parameter(parameter);
    let mut samples = Vec::with_capacity(5);
    for i in -2i32..=2 {
        let x = x0 * (T::one() + T::lit(0.025 * f64::from(i)));
        let g = base.get().with_parameter(parameter, x).validate()?;
        let (fs, _) = evaluate_modes(&g, opts)?;
        samples.push((x, fs / T::lit(1e6)));
    }
    let n = T::from_count(samples.len());
    let mx = samples.iter().map(|s| s.0).sum::<T>() / n;
    let my = samples.iter().map(|s| s.1).sum::<T>() / n;
    let sxx: T = samples.iter().map(|s| (s.0 - mx) * (s.0 - mx)).sum();
    let sxy: T = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let slope = sxy / sxx;
    let ss: T = samples
        .iter()
        .map(|s| {
            let r = s.1 - (my + slope * (s.0 - mx));
            r * r
        })
        .sum();
    Ok(SensitivityResult {
        parameter,
        slope_mhz_per_mm: slope,
        residual_mhz: (ss / n).sqrt(),
        samples,
    })
}
