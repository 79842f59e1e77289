//! Closed-form lumped elements derived from the geometry.

use crate::constants::{EPSILON_0, MU_0, M_PER_MM, M_PER_UM};
use crate::geometry::ValidatedGeometry;
use crate::numeric::brent;
use crate::Scalar;

use super::CircuitError;

/// Gap fringing multiplier that puts the reference geometry's symmetric mode
/// at 2.87 GHz. Frozen; see [`calibrate_fringing_multiplier`].
pub const FRINGING_MULTIPLIER: f64 = 7.789_202_423_434_393;

/// Self-inductance of a thin circular loop, `mu0 R (ln(8R/a) - 2)`, with the
/// flat strip replaced by a round wire of radius `a = w/4`.
pub fn loop_inductance<T: Scalar>(g: &ValidatedGeometry<T>) -> T {
    circular_loop_inductance(g.ring_radius_mm, g.strip_width_mm)
}

pub(crate) fn circular_loop_inductance<T: Scalar>(radius_mm: T, strip_width_mm: T) -> T {
    let r = radius_mm * T::lit(M_PER_MM);
    let a = strip_width_mm / T::lit(4.0);
    T::lit(MU_0) * r * ((T::lit(8.0) * radius_mm / a).ln() - T::lit(2.0))
}

/// Mutual inductance of two coaxial equal loops, H, from Neumann's double
/// integral reduced to one periodic integral and evaluated with the
/// (spectrally accurate) trapezoidal rule.
pub fn neumann_mutual_inductance<T: Scalar>(radius_mm: T, separation_mm: T) -> T {
    let q = separation_mm / radius_mm;
    let q2 = q * q;
    // The integrand's peak width scales with d/R; keep many nodes across it.
    let n = ((T::lit(64.0) / q).ceil().as_f64() as usize).clamp(512, 1 << 20);
    let h = T::TAU() / T::from_count(n);
    let mut acc = T::zero();
    for i in 0..n {
        let psi = h * T::from_count(i);
        let c = psi.cos();
        acc += c / (T::lit(2.0) * (T::one() - c) + q2).sqrt();
    }
    T::lit(MU_0) * radius_mm * T::lit(M_PER_MM) / T::lit(2.0) * acc * h
}

/// Coupling coefficient `k = M / L` of the two rings.
pub fn mutual_coupling<T: Scalar>(
    radius_mm: T,
    separation_mm: T,
    strip_width_mm: T,
) -> Result<T, CircuitError> {
    if !(separation_mm > T::zero()) {
        return Err(CircuitError::InvalidParams(
            "ring separation must be positive".into(),
        ));
    }
    let k = neumann_mutual_inductance(radius_mm, separation_mm)
        / circular_loop_inductance(radius_mm, strip_width_mm);
    if !(k < T::one()) {
        return Err(CircuitError::InvalidParams(format!(
            "rings too close for the filament model: k = {k}"
        )));
    }
    Ok(k)
}

/// Quasi-static effective permittivity of a microstrip of width/height ratio `u`.
pub fn microstrip_effective_permittivity<T: Scalar>(eps_r: T, u: T) -> T {
    let half = T::lit(0.5);
    let base = (T::one() + T::lit(12.0) / u).powf(-half);
    let extra = if u <= T::one() {
        T::lit(0.04) * (T::one() - u).powi(2)
    } else {
        T::zero()
    };
    (eps_r + T::one()) * half + (eps_r - T::one()) * half * (base + extra)
}

/// Microstrip capacitance per unit length to the ground plate, F/m
/// (Wheeler/Hammerstad closed forms).
pub fn microstrip_capacitance_per_m<T: Scalar>(eps_r: T, u: T) -> T {
    let eps_eff = microstrip_effective_permittivity(eps_r, u);
    let shape = if u <= T::one() {
        T::TAU() / (T::lit(8.0) / u + u / T::lit(4.0)).ln()
    } else {
        u + T::lit(1.393) + T::lit(0.667) * (u + T::lit(1.444)).ln()
    };
    T::lit(EPSILON_0) * eps_eff * shape
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitanceBreakdown<T> {
    /// Parallel-plate split-gap term including the fringing multiplier.
    pub gap_f: T,
    /// Ring-to-ground distributed capacitance referred to the gap.
    pub ring_f: T,
}

impl<T: Scalar> CapacitanceBreakdown<T> {
    pub fn total(&self) -> T {
        self.gap_f + self.ring_f
    }
}

/// Capacitance across the split: the gap term
/// `multiplier * eps0 * (eps_r + 1)/2 * w t / g_s` in parallel with the ring's
/// microstrip capacitance to ground. A linear potential around the ring
/// stores `C_ring_total / 12` worth of energy per volt squared across the gap.
pub fn capacitance_breakdown<T: Scalar>(
    g: &ValidatedGeometry<T>,
    fringing_multiplier: T,
) -> CapacitanceBreakdown<T> {
    let mm = T::lit(M_PER_MM);
    let w = g.strip_width_mm * mm;
    let t = g.conductor_thickness_um * T::lit(M_PER_UM);
    let gap = g.split_gap_mm * mm;
    let eps_gap = (g.substrate_permittivity + T::one()) / T::lit(2.0);
    let gap_f = fringing_multiplier * T::lit(EPSILON_0) * eps_gap * w * t / gap;

    let u = g.strip_width_mm / g.substrate_thickness_mm;
    let per_m = microstrip_capacitance_per_m(g.substrate_permittivity, u);
    let length = (T::TAU() * g.ring_radius_mm - g.split_gap_mm) * mm;
    let ring_f = per_m * length / T::lit(12.0);
    CapacitanceBreakdown { gap_f, ring_f }
}

pub fn split_capacitance<T: Scalar>(g: &ValidatedGeometry<T>, fringing_multiplier: T) -> T {
    capacitance_breakdown(g, fringing_multiplier).total()
}

/// Unloaded symmetric-mode frequency for a given fringing multiplier.
pub(crate) fn symmetric_frequency<T: Scalar>(
    g: &ValidatedGeometry<T>,
    fringing_multiplier: T,
) -> Result<T, CircuitError> {
    let l = loop_inductance(g);
    let c = split_capacitance(g, fringing_multiplier);
    let k = mutual_coupling(g.ring_radius_mm, g.ring_separation_mm, g.strip_width_mm)?;
    Ok(T::one() / (T::TAU() * (l * c * (T::one() + k)).sqrt()))
}

/// Solves for the fringing multiplier that places the symmetric mode at `target_hz`.
pub fn calibrate_fringing_multiplier<T: Scalar>(
    g: &ValidatedGeometry<T>,
    target_hz: T,
) -> Result<T, CircuitError> {
    let f_of = |m: T| symmetric_frequency(g, m).map(|f| f - target_hz).unwrap_or(T::nan());
    brent(f_of, T::lit(1e-6), T::lit(1e6), T::lit(1e-12), 200)
        .map_err(|e| CircuitError::Calibration(e.to_string()))
}
