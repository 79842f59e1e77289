use num_complex::Complex;

use crate::circuit::DriveState;
use crate::constants::{GAUSS_PER_TESLA, MU_0, M_PER_MM};
use crate::geometry::CurrentSegmentSet;
use crate::vec3::{add, cross, dot, norm, scale, sub, zero, Vec3};
use crate::Scalar;

use super::FieldError;

/// Closest approach allowed between a field point and a filament, mm.
pub const CONDUCTOR_CLEARANCE_MM: f64 = 1e-6;

fn distance_to_segment<T: Scalar>(a: Vec3<T>, b: Vec3<T>, p: Vec3<T>) -> T {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > T::zero() {
        (dot(sub(p, a), ab) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    norm(sub(p, add(a, scale(ab, t))))
}

/// Field of a straight filament from `a` to `b` (mm) carrying 1 A, in tesla.
pub fn segment_field<T: Scalar>(a: Vec3<T>, b: Vec3<T>, p: Vec3<T>) -> Vec3<T> {
    let r1 = sub(p, a);
    let r2 = sub(p, b);
    let n1 = norm(r1);
    let n2 = norm(r2);
    let den = n1 * n2 * (n1 * n2 + dot(r1, r2));
    if !(den > T::zero()) {
        return zero();
    }
    let k = T::lit(MU_0 / (4.0 * std::f64::consts::PI) / M_PER_MM) * (n1 + n2) / den;
    scale(cross(r1, r2), k)
}

fn check_clearance<T: Scalar>(segments: &CurrentSegmentSet<T>, p: Vec3<T>) -> Result<(), FieldError> {
    let tol = T::lit(CONDUCTOR_CLEARANCE_MM);
    for s in &segments.segments {
        if distance_to_segment(s.start, s.end, p) <= tol {
            return Err(FieldError::PointOnConductor {
                point_mm: [p[0].as_f64(), p[1].as_f64(), p[2].as_f64()],
            });
        }
    }
    Ok(())
}

/// Field of every filament carrying `current_a`, tesla. Point in mm.
pub fn biot_savart<T: Scalar>(
    segments: &CurrentSegmentSet<T>,
    point_mm: Vec3<T>,
    current_a: T,
) -> Result<Vec3<T>, FieldError> {
    check_clearance(segments, point_mm)?;
    let mut acc = zero();
    for s in &segments.segments {
        acc = add(acc, scale(segment_field(s.start, s.end, point_mm), s.weight));
    }
    Ok(scale(acc, current_a))
}

/// Per-ampere field of each ring separately, tesla.
pub fn ring_fields<T: Scalar>(
    segments: &CurrentSegmentSet<T>,
    point_mm: Vec3<T>,
) -> Result<[Vec3<T>; 2], FieldError> {
    check_clearance(segments, point_mm)?;
    let mut acc = [zero(), zero()];
    for s in &segments.segments {
        let r = s.ring.min(1);
        acc[r] = add(acc[r], scale(segment_field(s.start, s.end, point_mm), s.weight));
    }
    Ok(acc)
}

/// Anything that can report a real field vector (gauss) at a point (mm).
pub trait FieldSource<T: Scalar>: Sync {
    fn field_gauss(&self, point_mm: Vec3<T>) -> Result<Vec3<T>, FieldError>;
}

/// Both rings driven by phasor currents. The real field reported is the
/// phasor projected on the phase of `I1 + I2`, i.e. the amplitude of the
/// in-phase component.
#[derive(Debug, Clone)]
pub struct RingPairField<T> {
    pub segments: CurrentSegmentSet<T>,
    pub currents: [Complex<T>; 2],
}

impl<T: Scalar> RingPairField<T> {
    pub fn new(segments: CurrentSegmentSet<T>, drive: &DriveState<T>) -> Self {
        Self {
            segments,
            currents: drive.currents(),
        }
    }

    fn projected_currents(&self) -> [T; 2] {
        let sum = self.currents[0] + self.currents[1];
        let reference = if sum.norm() > T::zero() {
            sum
        } else if self.currents[0].norm() > T::zero() {
            self.currents[0]
        } else {
            Complex::new(T::one(), T::zero())
        };
        let unit = reference / reference.norm();
        [
            (self.currents[0] * unit.conj()).re,
            (self.currents[1] * unit.conj()).re,
        ]
    }
}

impl<T: Scalar> FieldSource<T> for RingPairField<T> {
    fn field_gauss(&self, point_mm: Vec3<T>) -> Result<Vec3<T>, FieldError> {
        let [b1, b2] = ring_fields(&self.segments, point_mm)?;
        let [i1, i2] = self.projected_currents();
        Ok(scale(add(scale(b1, i1), scale(b2, i2)), T::lit(GAUSS_PER_TESLA)))
    }
}
