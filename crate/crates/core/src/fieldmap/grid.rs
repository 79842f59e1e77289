use std::fmt;

use rayon::prelude::*;

use crate::circuit::{DriveState, PortMode};
use crate::geometry::{discretize, DiscretizeOptions, ValidatedGeometry};
use crate::vec3::{add, scale, Vec3};
use crate::Scalar;

use super::biot_savart::{FieldSource, RingPairField};
use super::FieldError;

/// Cylinder coaxial with the rings, sampled on a polar grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingVolume<T> {
    pub diameter_mm: T,
    pub height_mm: T,
    pub n_r: usize,
    pub n_phi: usize,
    pub n_z: usize,
    pub center_mm: Vec3<T>,
}

impl<T: Scalar> Default for SamplingVolume<T> {
    fn default() -> Self {
        Self {
            diameter_mm: T::lit(0.5),
            height_mm: T::lit(0.5),
            n_r: 21,
            n_phi: 24,
            n_z: 21,
            center_mm: [T::zero(); 3],
        }
    }
}

/// One grid node: position (mm), field (gauss) and the volume it represents (mm^3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample<T> {
    pub position_mm: Vec3<T>,
    pub b_gauss: Vec3<T>,
    pub weight: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Field at the drive currents as given.
    PerAmpere,
    /// Field for 1 W delivered.
    PerSqrtWatt,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::PerAmpere => "per-ampere",
            Normalization::PerSqrtWatt => "per-sqrt-watt",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap<T> {
    pub samples: Vec<FieldSample<T>>,
    pub normalization: Normalization,
    pub mode: PortMode,
}

impl<T: Scalar> SamplingVolume<T> {
    pub fn with_diameter(mut self, diameter_mm: T) -> Self {
        self.diameter_mm = diameter_mm;
        self
    }

    pub fn with_grid(mut self, n_r: usize, n_phi: usize, n_z: usize) -> Self {
        self.n_r = n_r;
        self.n_phi = n_phi;
        self.n_z = n_z;
        self
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.diameter_mm > T::zero()) || !self.diameter_mm.is_finite() {
            return Err(FieldError::InvalidVolume(format!(
                "diameter must be positive (got {})",
                self.diameter_mm
            )));
        }
        if !(self.height_mm > T::zero()) || !self.height_mm.is_finite() {
            return Err(FieldError::InvalidVolume(format!(
                "height must be positive (got {})",
                self.height_mm
            )));
        }
        if self.n_r == 0 || self.n_phi == 0 || self.n_z == 0 {
            return Err(FieldError::InvalidVolume("grid counts must be at least 1".into()));
        }
        if self.center_mm.iter().any(|c| !c.is_finite()) {
            return Err(FieldError::InvalidVolume("center offset must be finite".into()));
        }
        Ok(())
    }

    /// Outermost radial distance from the ring axis, mm.
    pub fn extent_radius_mm(&self) -> T {
        let off = (self.center_mm[0] * self.center_mm[0] + self.center_mm[1] * self.center_mm[1]).sqrt();
        self.diameter_mm / T::lit(2.0) + off
    }

    pub fn check_bore(&self, g: &ValidatedGeometry<T>) -> Result<(), FieldError> {
        self.validate()?;
        let bore = g.bore_radius_mm();
        if !(self.extent_radius_mm() < bore) {
            return Err(FieldError::VolumeExceedsBore {
                radius_mm: self.extent_radius_mm().as_f64(),
                bore_mm: bore.as_f64(),
            });
        }
        Ok(())
    }

    /// Grid nodes with their volume weights. Radial nodes are `i * dr` from
    /// the axis out to the rim; the axis node stands for a disc of radius
    /// `dr / 2`, the rim node for a half annulus. The `z` rule is trapezoidal.
    pub fn nodes(&self) -> Result<Vec<(Vec3<T>, T)>, FieldError> {
        self.validate()?;
        let half = T::lit(0.5);
        let rim = self.diameter_mm * half;
        let pi = T::PI();

        let mut rings: Vec<(T, T, usize)> = Vec::with_capacity(self.n_r);
        if self.n_r == 1 {
            rings.push((T::zero(), pi * rim * rim, 1));
        } else {
            let dr = rim / T::from_count(self.n_r - 1);
            rings.push((T::zero(), pi * (dr * half) * (dr * half), 1));
            for i in 1..self.n_r {
                let r = dr * T::from_count(i);
                let outer = (r + dr * half).min(rim);
                let inner = r - dr * half;
                rings.push((r, pi * (outer * outer - inner * inner), self.n_phi));
            }
        }

        let zs: Vec<(T, T)> = if self.n_z == 1 {
            vec![(T::zero(), self.height_mm)]
        } else {
            let dz = self.height_mm / T::from_count(self.n_z - 1);
            (0..self.n_z)
                .map(|j| {
                    let z = -self.height_mm * half + dz * T::from_count(j);
                    let w = if j == 0 || j + 1 == self.n_z { dz * half } else { dz };
                    (z, w)
                })
                .collect()
        };

        let mut out = Vec::with_capacity(rings.iter().map(|r| r.2).sum::<usize>() * zs.len());
        for &(r, area, n_az) in &rings {
            let dphi = T::TAU() / T::from_count(n_az);
            let wa = area / T::from_count(n_az);
            for k in 0..n_az {
                let phi = dphi * T::from_count(k);
                for &(z, wz) in &zs {
                    let p = [r * phi.cos(), r * phi.sin(), z];
                    out.push((add(p, self.center_mm), wa * wz));
                }
            }
        }
        Ok(out)
    }
}

/// Evaluates any field source over the volume's nodes, in parallel.
pub fn sample_field<T: Scalar, S: FieldSource<T>>(
    source: &S,
    vol: &SamplingVolume<T>,
) -> Result<Vec<FieldSample<T>>, FieldError> {
    vol.nodes()?
        .into_par_iter()
        .map(|(p, w)| {
            source.field_gauss(p).map(|b| FieldSample {
                position_mm: p,
                b_gauss: b,
                weight: w,
            })
        })
        .collect()
}

/// Field over the sampling volume for the drive's ring currents.
///
/// When the drive carries a delivered power the map is divided by its square
/// root and tagged per-sqrt-watt.
pub fn evaluate_field_grid<T: Scalar>(
    g: &ValidatedGeometry<T>,
    drive: &DriveState<T>,
    vol: &SamplingVolume<T>,
) -> Result<FieldMap<T>, FieldError> {
    evaluate_field_grid_with(g, drive, vol, &DiscretizeOptions::default())
}

pub fn evaluate_field_grid_with<T: Scalar>(
    g: &ValidatedGeometry<T>,
    drive: &DriveState<T>,
    vol: &SamplingVolume<T>,
    opts: &DiscretizeOptions<T>,
) -> Result<FieldMap<T>, FieldError> {
    vol.check_bore(g)?;
    let source = RingPairField::new(discretize(g, opts)?, drive);
    let mut samples = sample_field(&source, vol)?;
    let normalization = match drive.power_w {
        Some(p) => {
            if p > T::zero() {
                let k = T::one() / p.sqrt();
                for s in &mut samples {
                    s.b_gauss = scale(s.b_gauss, k);
                }
            }
            Normalization::PerSqrtWatt
        }
        None => Normalization::PerAmpere,
    };
    if samples.iter().any(|s| s.b_gauss.iter().any(|c| !c.is_finite())) {
        return Err(FieldError::NonFinite);
    }
    Ok(FieldMap {
        samples,
        normalization,
        mode: drive.mode,
    })
}
