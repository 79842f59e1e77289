//! Physical constants (SI, CODATA 2018) and unit conversions.

/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// NV gyromagnetic ratio, Hz/T (28 GHz/T, i.e. 2.8 MHz/G).
pub const GAMMA_NV_HZ_PER_T: f64 = 28.0e9;

pub const GAUSS_PER_TESLA: f64 = 1.0e4;
pub const M_PER_MM: f64 = 1.0e-3;
pub const M_PER_UM: f64 = 1.0e-6;
