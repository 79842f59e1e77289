use crate::circuit::{loaded_resonance, solve_currents, CircuitParams, DriveState, PortMode};
use crate::geometry::{DiscretizeOptions, ValidatedGeometry};
use crate::Scalar;

use super::grid::{evaluate_field_grid_with, SamplingVolume};
use super::homogeneity::{homogeneity, FieldComponent};
use super::FieldError;

/// Ring current amplitude for a co-driven pair at resonance: the stored
/// energy `L I^2 (1 + k)` equals `Q P / omega`.
pub fn current_for_power<T: Scalar>(
    p: &CircuitParams<T>,
    q_loaded: T,
    frequency_hz: T,
    power_w: T,
) -> T {
    let w = T::TAU() * frequency_hz;
    (q_loaded * power_w / (w * p.inductance_h * (T::one() + p.coupling))).sqrt()
}

/// Ring currents at the loaded resonance for `power_w` delivered. The ratio
/// of the currents comes from the two-loop solution, the overall scale from
/// matching stored energy to `Q_L P / omega`.
pub fn drive_for_power<T: Scalar>(
    p: &CircuitParams<T>,
    mode: PortMode,
    power_w: T,
) -> Result<(DriveState<T>, T), FieldError> {
    let res = loaded_resonance(p, mode)?;
    let f = res.peak_hz;
    let shape = solve_currents(p, f, mode, T::one())?;
    let half = T::lit(0.5);
    let stored = half * p.inductance_h * (shape.i1.norm_sqr() + shape.i2.norm_sqr())
        + p.mutual_inductance_h() * (shape.i1 * shape.i2.conj()).re;
    let target = res.loaded_q * power_w / (T::TAU() * f);
    if !(stored > T::zero()) {
        return Err(FieldError::NonFinite);
    }
    let mut drive = shape.scaled((target / stored).sqrt());
    drive.power_w = Some(power_w);
    Ok((drive, res.loaded_q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEfficiency<T> {
    /// Mean `B_z` over the volume for 1 W delivered, G/sqrt(W).
    pub mean_bz_gauss_per_sqrt_w: T,
    pub sigma: T,
    pub loaded_q: T,
    pub frequency_hz: T,
    pub drive: DriveState<T>,
}

pub fn field_per_sqrt_watt<T: Scalar>(
    g: &ValidatedGeometry<T>,
    p: &CircuitParams<T>,
    vol: &SamplingVolume<T>,
    mode: PortMode,
) -> Result<FieldEfficiency<T>, FieldError> {
    field_per_sqrt_watt_with(g, p, vol, mode, &DiscretizeOptions::default())
}

pub fn field_per_sqrt_watt_with<T: Scalar>(
    g: &ValidatedGeometry<T>,
    p: &CircuitParams<T>,
    vol: &SamplingVolume<T>,
    mode: PortMode,
    opts: &DiscretizeOptions<T>,
) -> Result<FieldEfficiency<T>, FieldError> {
    vol.check_bore(g)?;
    let (drive, q) = drive_for_power(p, mode, T::one())?;
    let map = evaluate_field_grid_with(g, &drive, vol, opts)?;
    let rep = homogeneity(&map, FieldComponent::Z)?;
    Ok(FieldEfficiency {
        mean_bz_gauss_per_sqrt_w: rep.mean_gauss,
        sigma: rep.sigma,
        loaded_q: q,
        frequency_hz: drive.frequency_hz,
        drive,
    })
}
