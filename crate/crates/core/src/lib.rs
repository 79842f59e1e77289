//! Lumped-circuit and magnetostatic models of a pair of coaxial split-ring
//! resonators used as a microwave drive for NV-centre ensembles, with the
//! trace fits and sensitivity budget that go with them.
//!
//! Every model is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod circuit;
pub mod constants;
pub mod design;
pub mod fieldmap;
pub mod geometry;
pub mod metrology;
pub mod numeric;
mod scalar;
pub mod vec3;

use thiserror::Error;

pub use scalar::Scalar;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Circuit(#[from] circuit::CircuitError),
    #[error(transparent)]
    Field(#[from] fieldmap::FieldError),
    #[error(transparent)]
    Design(#[from] design::DesignError),
    #[error(transparent)]
    Metrology(#[from] metrology::MetrologyError),
    #[error(transparent)]
    Budget(#[from] budget::BudgetError),
}

impl Error {
    /// Stable identifier of the error variant, for machine-readable output.
    pub fn kind(&self) -> &'static str {
        use circuit::CircuitError as C;
        use design::DesignError as D;
        use fieldmap::FieldError as F;
        use metrology::MetrologyError as M;
        match self {
            Error::Geometry(geometry::GeometryError::InvalidGeometry(_)) => "InvalidGeometry",
            Error::Geometry(geometry::GeometryError::TooFewSegments { .. }) => "TooFewSegments",
            Error::Circuit(C::SingularSystem { .. }) => "SingularSystem",
            Error::Circuit(C::Geometry(_)) | Error::Field(F::Geometry(_)) | Error::Design(D::Geometry(_)) => {
                "InvalidGeometry"
            }
            Error::Circuit(_) => "CircuitError",
            Error::Field(F::PointOnConductor { .. }) => "PointOnConductor",
            Error::Field(F::VolumeExceedsBore { .. }) => "VolumeExceedsBore",
            Error::Field(F::ZeroMeanField) => "ZeroMeanField",
            Error::Field(_) => "FieldError",
            Error::Design(D::NoFeasiblePoint { .. }) => "NoFeasiblePoint",
            Error::Design(_) => "DesignError",
            Error::Metrology(M::InsufficientOscillations(_)) => "InsufficientOscillations",
            Error::Metrology(M::FitDiverged(_)) => "FitDiverged",
            Error::Metrology(M::NoDipFound(_)) => "NoDipFound",
            Error::Metrology(M::DegenerateInput(_)) => "DegenerateInput",
            Error::Metrology(_) => "InvalidTrace",
            Error::Budget(budget::BudgetError::DegenerateInput(_)) => "DegenerateInput",
            Error::Budget(_) => "BudgetError",
        }
    }
}

pub type Geometry = geometry::ResonatorGeometry<f64>;
pub type Validated = geometry::ValidatedGeometry<f64>;
pub type Segments = geometry::CurrentSegmentSet<f64>;
pub type Circuit = circuit::CircuitParams<f64>;
pub type CircuitSettings = circuit::CircuitOptions<f64>;
pub type Drive = circuit::DriveState<f64>;
pub type Volume = fieldmap::SamplingVolume<f64>;
pub type Map = fieldmap::FieldMap<f64>;
pub type Inhomogeneity = fieldmap::InhomogeneityReport<f64>;
pub type Objective = design::DesignObjective<f64>;
pub type Trace = metrology::TimeTrace<f64>;
pub type Budget = budget::SensitivityBudget<f64>;
