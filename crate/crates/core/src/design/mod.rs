//! Parameter sweeps, resonance sensitivities and geometry optimization.

mod optimize;
mod sweep;

use thiserror::Error;

use crate::circuit::{eigenmodes, CircuitError, CircuitOptions, CircuitParams, FeedSetting, PortMode};
use crate::fieldmap::{field_per_sqrt_watt_with, FieldError, SamplingVolume};
use crate::geometry::{DiscretizeOptions, GeometryError, ValidatedGeometry};
use crate::Scalar;

pub use optimize::{optimize_design, DesignObjective, OptimizeResult, ParameterBounds, TraceEntry};
pub use sweep::{resonance_sensitivity, sweep, SensitivityResult, SweepRow, SweepSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("no feasible design among {evaluations} evaluated candidates")]
    NoFeasiblePoint { evaluations: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Everything besides the geometry that a design evaluation depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSettings<T> {
    pub circuit: CircuitOptions<T>,
    pub volume: SamplingVolume<T>,
    pub mode: PortMode,
    pub discretize: DiscretizeOptions<T>,
}

impl<T: Scalar> Default for EvaluationSettings<T> {
    fn default() -> Self {
        Self {
            circuit: CircuitOptions::default(),
            volume: SamplingVolume::default(),
            mode: PortMode::Dual,
            discretize: DiscretizeOptions::default(),
        }
    }
}

impl<T: Scalar> EvaluationSettings<T> {
    /// Circuit options with a tuned feed following the drive mode.
    pub fn circuit_for_mode(&self) -> CircuitOptions<T> {
        let mut c = self.circuit.clone();
        if let FeedSetting::Tuned(_) = c.feed {
            c.feed = FeedSetting::Tuned(self.mode);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint<T> {
    pub f_sym_hz: T,
    pub f_anti_hz: T,
    pub mean_field_g_per_sqrt_w: T,
    pub sigma: T,
}

/// Mode frequencies only.
pub fn evaluate_modes<T: Scalar>(
    g: &ValidatedGeometry<T>,
    opts: &CircuitOptions<T>,
) -> Result<(T, T), DesignError> {
    let fixed = CircuitOptions {
        feed: FeedSetting::Fixed {
            capacitance_f: T::lit(1e-15),
        },
        ..opts.clone()
    };
    let p = CircuitParams::from_geometry(g, &fixed)?;
    let m = eigenmodes(&p);
    Ok((m.symmetric_hz, m.antisymmetric_hz))
}

/// Mode frequencies, field efficiency and homogeneity of one geometry.
pub fn evaluate_design<T: Scalar>(
    g: &ValidatedGeometry<T>,
    settings: &EvaluationSettings<T>,
) -> Result<DesignPoint<T>, DesignError> {
    let p = CircuitParams::from_geometry(g, &settings.circuit_for_mode())?;
    let m = eigenmodes(&p);
    let e = field_per_sqrt_watt_with(g, &p, &settings.volume, settings.mode, &settings.discretize)?;
    Ok(DesignPoint {
        f_sym_hz: m.symmetric_hz,
        f_anti_hz: m.antisymmetric_hz,
        mean_field_g_per_sqrt_w: e.mean_bz_gauss_per_sqrt_w,
        sigma: e.sigma,
    })
}
