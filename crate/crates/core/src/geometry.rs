//! Resonator geometry, validation, and filament discretization of the two
//! stacked split rings.
//!
//! Ring 0 lies in the plane `z = -d/2`, ring 1 in `z = +d/2`, both centred on
//! the z axis and traversed counter-clockwise when seen from `+z`, so equal
//! positive currents are co-directional.

use std::fmt;

use thiserror::Error;

use crate::vec3::{norm, sub, Vec3};
use crate::Scalar;

/// Smallest per-ring segment count accepted by [`discretize`].
pub const MIN_SEGMENTS: usize = 12;
/// Default per-ring segment count.
pub const DEFAULT_SEGMENTS: usize = 360;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid geometry: {requested} segments per ring requested, minimum is {minimum}")]
    TooFewSegments { requested: usize, minimum: usize },
}

/// Dimensions of the stacked split-ring resonator plus material parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorGeometry<T> {
    pub ring_radius_mm: T,
    pub strip_width_mm: T,
    pub split_gap_mm: T,
    pub feed_gap_mm: T,
    pub ring_separation_mm: T,
    pub substrate_permittivity: T,
    pub conductor_thickness_um: T,
    /// Dielectric thickness between each ring and its ground plate.
    pub substrate_thickness_mm: T,
}

impl<T: Scalar> ResonatorGeometry<T> {
    /// The reference design: R = 2.9, w = 1, g_s = 0.4, g_c = 0.1, d = 2.2 (mm)
    /// on a 1.27 mm, eps_r = 10.2 laminate with 35 um copper.
    pub fn reference() -> Self {
        Self {
            ring_radius_mm: T::lit(2.9),
            strip_width_mm: T::lit(1.0),
            split_gap_mm: T::lit(0.4),
            feed_gap_mm: T::lit(0.1),
            ring_separation_mm: T::lit(2.2),
            substrate_permittivity: T::lit(10.2),
            conductor_thickness_um: T::lit(35.0),
            substrate_thickness_mm: T::lit(1.27),
        }
    }

    pub fn validate(self) -> Result<ValidatedGeometry<T>, GeometryError> {
        let positive = [
            ("ring_radius", self.ring_radius_mm),
            ("strip_width", self.strip_width_mm),
            ("split_gap", self.split_gap_mm),
            ("feed_gap", self.feed_gap_mm),
            ("conductor_thickness", self.conductor_thickness_um),
            ("substrate_thickness", self.substrate_thickness_mm),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(GeometryError::InvalidGeometry(format!(
                    "{name} must be positive and finite (got {v})"
                )));
            }
        }
        if !(self.ring_separation_mm > T::zero()) || !self.ring_separation_mm.is_finite() {
            return Err(GeometryError::InvalidGeometry(format!(
                "ring_separation must be positive, rings coincide (got {})",
                self.ring_separation_mm
            )));
        }
        if !(self.substrate_permittivity >= T::one()) || !self.substrate_permittivity.is_finite() {
            return Err(GeometryError::InvalidGeometry(format!(
                "substrate_permittivity must be at least 1 (got {})",
                self.substrate_permittivity
            )));
        }
        let circumference = T::TAU() * self.ring_radius_mm;
        if self.split_gap_mm >= circumference {
            return Err(GeometryError::InvalidGeometry(format!(
                "split_gap exceeds circumference ({} >= {})",
                self.split_gap_mm, circumference
            )));
        }
        if self.feed_gap_mm >= circumference {
            return Err(GeometryError::InvalidGeometry(format!(
                "feed_gap exceeds circumference ({} >= {})",
                self.feed_gap_mm, circumference
            )));
        }
        if self.strip_width_mm >= self.ring_radius_mm {
            return Err(GeometryError::InvalidGeometry(format!(
                "strip_width must be narrower than ring_radius ({} >= {})",
                self.strip_width_mm, self.ring_radius_mm
            )));
        }
        Ok(ValidatedGeometry(self))
    }

    pub fn parameter(&self, p: DesignParameter) -> T {
        match p {
            DesignParameter::RingRadius => self.ring_radius_mm,
            DesignParameter::RingSeparation => self.ring_separation_mm,
            DesignParameter::StripWidth => self.strip_width_mm,
            DesignParameter::SplitGap => self.split_gap_mm,
        }
    }

    pub fn with_parameter(mut self, p: DesignParameter, value: T) -> Self {
        match p {
            DesignParameter::RingRadius => self.ring_radius_mm = value,
            DesignParameter::RingSeparation => self.ring_separation_mm = value,
            DesignParameter::StripWidth => self.strip_width_mm = value,
            DesignParameter::SplitGap => self.split_gap_mm = value,
        }
        self
    }
}

/// A geometry that passed [`ResonatorGeometry::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedGeometry<T>(ResonatorGeometry<T>);

impl<T: Scalar> ValidatedGeometry<T> {
    pub fn get(&self) -> &ResonatorGeometry<T> {
        &self.0
    }

    pub fn into_inner(self) -> ResonatorGeometry<T> {
        self.0
    }

    /// Clear radius inside the strip: `R - w/2`.
    pub fn bore_radius_mm(&self) -> T {
        self.0.ring_radius_mm - self.0.strip_width_mm / T::lit(2.0)
    }
}

impl<T> std::ops::Deref for ValidatedGeometry<T> {
    type Target = ResonatorGeometry<T>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// Geometry dimensions that sweeps and the optimizer may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignParameter {
    RingRadius,
    RingSeparation,
    StripWidth,
    SplitGap,
}

impl DesignParameter {
    pub const ALL: [DesignParameter; 4] = [
        DesignParameter::RingRadius,
        DesignParameter::RingSeparation,
        DesignParameter::StripWidth,
        DesignParameter::SplitGap,
    ];

    /// Short symbol used in CSV output.
    pub fn symbol(self) -> &'static str {
        match self {
            DesignParameter::RingRadius => "R",
            DesignParameter::RingSeparation => "d",
            DesignParameter::StripWidth => "w",
            DesignParameter::SplitGap => "g_s",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "R" | "ring_radius" | "ring_radius_mm" => Some(DesignParameter::RingRadius),
            "d" | "ring_separation" | "ring_separation_mm" => Some(DesignParameter::RingSeparation),
            "w" | "strip_width" | "strip_width_mm" => Some(DesignParameter::StripWidth),
            "g_s" | "split_gap" | "split_gap_mm" => Some(DesignParameter::SplitGap),
            _ => None,
        }
    }
}

impl fmt::Display for DesignParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Straight current filament, coordinates in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub start: Vec3<T>,
    pub end: Vec3<T>,
    /// Current carried relative to the ring current.
    pub weight: T,
    /// 0 for the ring at `z = -d/2`, 1 for `z = +d/2`.
    pub ring: usize,
}

impl<T: Scalar> Segment<T> {
    pub fn length(&self) -> T {
        norm(sub(self.end, self.start))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSegmentSet<T> {
    pub segments: Vec<Segment<T>>,
}

impl<T: Scalar> CurrentSegmentSet<T> {
    pub fn ring(&self, ring: usize) -> impl Iterator<Item = &Segment<T>> {
        self.segments.iter().filter(move |s| s.ring == ring)
    }

    pub fn ring_length_mm(&self, ring: usize) -> T {
        self.ring(ring).map(|s| s.length()).sum()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizeOptions<T> {
    pub n_segments: usize,
    /// Omit the split arc `g_s / R` from each ring.
    pub include_gaps: bool,
    /// Azimuth of ring 0's split, radians.
    pub split_azimuth_rad: T,
    /// Azimuth of ring 1's split relative to ring 0's; pi places them opposite.
    pub split_offset_rad: T,
}

impl<T: Scalar> Default for DiscretizeOptions<T> {
    fn default() -> Self {
        Self {
            n_segments: DEFAULT_SEGMENTS,
            include_gaps: false,
            split_azimuth_rad: T::zero(),
            split_offset_rad: T::PI(),
        }
    }
}

impl<T: Scalar> DiscretizeOptions<T> {
    pub fn with_segments(mut self, n: usize) -> Self {
        self.n_segments = n;
        self
    }

    pub fn with_gaps(mut self, include: bool) -> Self {
        self.include_gaps = include;
        self
    }
}

/// Polygonal filament model of both rings.
///
/// Vertices sit on the radius `R sqrt(theta / sin theta)` (theta the angular
/// step) so each chord encloses the same area as the arc it replaces; this
/// cancels the leading `1/N^2` field error of an inscribed polygon.
pub fn discretize<T: Scalar>(
    g: &ValidatedGeometry<T>,
    opts: &DiscretizeOptions<T>,
) -> Result<CurrentSegmentSet<T>, GeometryError> {
    let n = opts.n_segments;
    if n < MIN_SEGMENTS {
        return Err(GeometryError::TooFewSegments {
            requested: n,
            minimum: MIN_SEGMENTS,
        });
    }
    let r = g.ring_radius_mm;
    let half_d = g.ring_separation_mm / T::lit(2.0);
    let gap_angle = if opts.include_gaps {
        g.split_gap_mm / r
    } else {
        T::zero()
    };
    let span = T::TAU() - gap_angle;
    let step = span / T::from_count(n);
    let rho = r * (step / step.sin()).sqrt();

    let mut segments = Vec::with_capacity(2 * n);
    for (ring, z, split) in [
        (0usize, -half_d, opts.split_azimuth_rad),
        (1usize, half_d, opts.split_azimuth_rad + opts.split_offset_rad),
    ] {
        let start_angle = split + gap_angle / T::lit(2.0);
        let vertex = |i: usize| -> Vec3<T> {
            // Closed rings reuse vertex 0 exactly so the polygon closes bit-for-bit.
            let i = if !opts.include_gaps && i == n { 0 } else { i };
            let a = start_angle + step * T::from_count(i);
            [rho * a.cos(), rho * a.sin(), z]
        };
        for i in 0..n {
            segments.push(Segment {
                start: vertex(i),
                end: vertex(i + 1),
                weight: T::one(),
                ring,
            });
        }
    }
    Ok(CurrentSegmentSet { segments })
}
