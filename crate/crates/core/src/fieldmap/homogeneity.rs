use std::fmt;
use std::str::FromStr;

use crate::circuit::DriveState;
use crate::geometry::{discretize, DiscretizeOptions, ValidatedGeometry};
use crate::vec3::{norm, Vec3};
use crate::Scalar;

use super::biot_savart::{FieldSource, RingPairField};
use super::grid::{evaluate_field_grid_with, FieldMap, SamplingVolume};
use super::FieldError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldComponent {
    Z,
    Magnitude,
}

impl FieldComponent {
    pub fn of<T: Scalar>(self, b: Vec3<T>) -> T {
        match self {
            FieldComponent::Z => b[2],
            FieldComponent::Magnitude => norm(b),
        }
    }
}

impl fmt::Display for FieldComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldComponent::Z => "z",
            FieldComponent::Magnitude => "magnitude",
        })
    }
}

impl FromStr for FieldComponent {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "z" => Ok(FieldComponent::Z),
            "magnitude" => Ok(FieldComponent::Magnitude),
            other => Err(format!("unknown field component `{other}` (expected z or magnitude)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingScheme {
    Grid,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InhomogeneityReport<T> {
    /// Absolute value of the weighted mean of the component, gauss.
    pub mean_gauss: T,
    /// Weighted standard deviation over the mean.
    pub sigma: T,
    pub component: FieldComponent,
    pub scheme: SamplingScheme,
}

/// Weighted mean and relative standard deviation of `(value, weight)` pairs.
pub fn weighted_sigma<T: Scalar>(values: &[(T, T)]) -> Result<(T, T), FieldError> {
    let wsum: T = values.iter().map(|v| v.1).sum();
    if values.is_empty() || !(wsum > T::zero()) {
        return Err(FieldError::ZeroMeanField);
    }
    let mean = values.iter().map(|&(v, w)| v * w).sum::<T>() / wsum;
    let scale = values.iter().map(|v| v.0.abs()).fold(T::zero(), T::max);
    if !(mean.abs() > scale * T::epsilon() * T::lit(16.0)) {
        return Err(FieldError::ZeroMeanField);
    }
    let var = values
        .iter()
        .map(|&(v, w)| {
            let d = v - mean;
            w * d * d
        })
        .sum::<T>()
        / wsum;
    Ok((mean, var.sqrt() / mean.abs()))
}

pub fn homogeneity<T: Scalar>(
    map: &FieldMap<T>,
    component: FieldComponent,
) -> Result<InhomogeneityReport<T>, FieldError> {
    let values: Vec<(T, T)> = map
        .samples
        .iter()
        .map(|s| (component.of(s.b_gauss), s.weight))
        .collect();
    let (mean, sigma) = weighted_sigma(&values)?;
    Ok(InhomogeneityReport {
        mean_gauss: mean.abs(),
        sigma,
        component,
        scheme: SamplingScheme::Grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityPoint<T> {
    pub diameter_mm: T,
    pub report: InhomogeneityReport<T>,
}

/// Grid homogeneity for each diameter, other volume settings held fixed.
pub fn homogeneity_curve<T: Scalar>(
    g: &ValidatedGeometry<T>,
    drive: &DriveState<T>,
    vol: &SamplingVolume<T>,
    diameters_mm: &[T],
    component: FieldComponent,
    opts: &DiscretizeOptions<T>,
) -> Result<Vec<HomogeneityPoint<T>>, FieldError> {
    diameters_mm
        .iter()
        .map(|&d| {
            let map = evaluate_field_grid_with(g, drive, &vol.with_diameter(d), opts)?;
            Ok(HomogeneityPoint {
                diameter_mm: d,
                report: homogeneity(&map, component)?,
            })
        })
        .collect()
}

/// Measurement-style sampling layout: 8 azimuths at each radius, repeated on
/// 4 planes at the centres of equal slabs of the height.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSampling<T> {
    pub radii_mm: Vec<T>,
    pub height_mm: T,
    pub n_azimuth: usize,
    pub n_planes: usize,
    pub center_mm: Vec3<T>,
}

impl<T: Scalar> SparseSampling<T> {
    /// Four radii `D/8, D/4, 3D/8, D/2`.
    pub fn for_diameter(diameter_mm: T, height_mm: T) -> Self {
        let r = diameter_mm / T::lit(8.0);
        Self {
            radii_mm: (1..=4).map(|i| r * T::from_count(i)).collect(),
            height_mm,
            n_azimuth: 8,
            n_planes: 4,
            center_mm: [T::zero(); 3],
        }
    }

    /// Points and weights. Each radius stands for the annulus between the
    /// midpoints to its neighbours, from the axis out to the last radius.
    pub fn points(&self) -> Result<Vec<(Vec3<T>, T)>, FieldError> {
        let r = &self.radii_mm;
        if r.is_empty() || r.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(FieldError::InvalidVolume("radii must be positive".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FieldError::InvalidVolume("radii must be strictly increasing".into()));
        }
        if self.n_azimuth == 0 || self.n_planes == 0 || !(self.height_mm > T::zero()) {
            return Err(FieldError::InvalidVolume(
                "sampling counts and height must be positive".into(),
            ));
        }
        let half = T::lit(0.5);
        let mut bounds = vec![T::zero()];
        bounds.extend(r.windows(2).map(|w| (w[0] + w[1]) * half));
        bounds.push(*r.last().unwrap());

        let per_point = T::from_count(self.n_azimuth * self.n_planes);
        let slab = self.height_mm / T::from_count(self.n_planes);
        let mut out = Vec::with_capacity(r.len() * self.n_azimuth * self.n_planes);
        for (i, &ri) in r.iter().enumerate() {
            let area = T::PI() * (bounds[i + 1] * bounds[i + 1] - bounds[i] * bounds[i]);
            let w = area / per_point;
            for a in 0..self.n_azimuth {
                let phi = T::TAU() * T::from_count(a) / T::from_count(self.n_azimuth);
                for k in 0..self.n_planes {
                    let z = -self.height_mm * half + slab * (T::from_count(k) + half);
                    let p = [
                        self.center_mm[0] + ri * phi.cos(),
                        self.center_mm[1] + ri * phi.sin(),
                        self.center_mm[2] + z,
                    ];
                    out.push((p, w));
                }
            }
        }
        Ok(out)
    }
}

/// Homogeneity from the sparse measurement-style point set.
pub fn sparse_sampled_homogeneity<T: Scalar, S: FieldSource<T>>(
    source: &S,
    sampling: &SparseSampling<T>,
    component: FieldComponent,
) -> Result<InhomogeneityReport<T>, FieldError> {
    let values = sampling
        .points()?
        .into_iter()
        .map(|(p, w)| source.field_gauss(p).map(|b| (component.of(b), w)))
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, sigma) = weighted_sigma(&values)?;
    Ok(InhomogeneityReport {
        mean_gauss: mean.abs(),
        sigma,
        component,
        scheme: SamplingScheme::Sparse,
    })
}

/// [`sparse_sampled_homogeneity`] for the rings of `g`, with a bore check.
pub fn sparse_sampled_for_geometry<T: Scalar>(
    g: &ValidatedGeometry<T>,
    drive: &DriveState<T>,
    sampling: &SparseSampling<T>,
    component: FieldComponent,
    opts: &DiscretizeOptions<T>,
) -> Result<InhomogeneityReport<T>, FieldError> {
    let bore = g.bore_radius_mm();
    let off = (sampling.center_mm[0].powi(2) + sampling.center_mm[1].powi(2)).sqrt();
    if let Some(&r) = sampling.radii_mm.last() {
        if !(r + off < bore) {
            return Err(FieldError::VolumeExceedsBore {
                radius_mm: (r + off).as_f64(),
                bore_mm: bore.as_f64(),
            });
        }
    }
    let source = RingPairField::new(discretize(g, opts)?, drive);
    sparse_sampled_homogeneity(&source, sampling, component)
}
