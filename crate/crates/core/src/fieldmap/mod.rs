//! Quasi-static magnetic field of the ring filaments and its homogeneity
//! over a cylindrical sensing volume.

mod biot_savart;
mod efficiency;
mod grid;
mod homogeneity;

use thiserror::Error;

use crate::circuit::CircuitError;
use crate::geometry::GeometryError;

pub use biot_savart::{
    biot_savart, ring_fields, segment_field, FieldSource, RingPairField, CONDUCTOR_CLEARANCE_MM,
};
pub use efficiency::{
    current_for_power, drive_for_power, field_per_sqrt_watt, field_per_sqrt_watt_with,
    FieldEfficiency,
};
pub use grid::{
    evaluate_field_grid, evaluate_field_grid_with, sample_field, FieldMap, FieldSample,
    Normalization, SamplingVolume,
};
pub use homogeneity::{
    homogeneity, homogeneity_curve, sparse_sampled_for_geometry, sparse_sampled_homogeneity,
    weighted_sigma, FieldComponent, HomogeneityPoint, InhomogeneityReport, SparseSampling,
    SamplingScheme,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("field point {point_mm:?} mm lies on a conductor")]
    PointOnConductor { point_mm: [f64; 3] },
    #[error("sampling volume reaches {radius_mm} mm from the axis, bore radius is {bore_mm} mm")]
    VolumeExceedsBore { radius_mm: f64, bore_mm: f64 },
    #[error("mean field is zero; homogeneity is undefined")]
    ZeroMeanField,
    #[error("invalid sampling volume: {0}")]
    InvalidVolume(String),
    #[error("field evaluation produced a non-finite value")]
    NonFinite,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}
