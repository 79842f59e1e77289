//! Lumped two-loop model of the coupled rings.
//!
//! Each ring is a series `R L C` loop with `R = omega L / Q_u`; the rings share
//! a mutual inductance `M = k L` with positive sign for co-directional
//! currents. A port couples to a ring through a series feed capacitance
//! `C_f` connected across that ring's split.

mod lumped;
mod network;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use thiserror::Error;

use crate::geometry::{GeometryError, ValidatedGeometry};
use crate::Scalar;

pub use lumped::{
    calibrate_fringing_multiplier, capacitance_breakdown, loop_inductance,
    microstrip_capacitance_per_m, microstrip_effective_permittivity, mutual_coupling,
    neumann_mutual_inductance, split_capacitance, CapacitanceBreakdown, FRINGING_MULTIPLIER,
};
pub use network::{
    gap_impedance, input_impedance, loaded_resonance, q_and_bandwidth, s11, s11_spectrum, solve_currents,
    tune_feed, FeedMatch, QualityReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid circuit parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular impedance matrix at {frequency_hz} Hz")]
    SingularSystem { frequency_hz: f64 },
    #[error("feed matching failed: {0}")]
    FeedMatch(String),
    #[error("no resonance found near {frequency_hz} Hz: {reason}")]
    NoResonance { frequency_hz: f64, reason: String },
    #[error("calibration failed: {0}")]
    Calibration(String),
}

/// Which ports carry a source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortMode {
    /// Port 1 driven, ring 2 left without a source.
    Single,
    /// Both ports driven with equal amplitude and phase.
    Dual,
}

impl fmt::Display for PortMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortMode::Single => "single",
            PortMode::Dual => "dual",
        })
    }
}

impl FromStr for PortMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(PortMode::Single),
            "dual" => Ok(PortMode::Dual),
            other => Err(format!("unknown port mode `{other}` (expected single or dual)")),
        }
    }
}

/// How the feed capacitance is chosen when deriving parameters from geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedSetting<T> {
    /// Critically couple the symmetric mode seen from the given port configuration.
    Tuned(PortMode),
    Fixed { capacitance_f: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitOptions<T> {
    pub unloaded_q: T,
    pub line_impedance_ohm: T,
    pub fringing_multiplier: T,
    pub feed: FeedSetting<T>,
}

impl<T: Scalar> Default for CircuitOptions<T> {
    fn default() -> Self {
        Self {
            unloaded_q: T::lit(220.0),
            line_impedance_ohm: T::lit(50.0),
            fringing_multiplier: T::lit(FRINGING_MULTIPLIER),
            feed: FeedSetting::Tuned(PortMode::Single),
        }
    }
}

/// Lumped parameters of one ring plus the shared coupling and feed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams<T> {
    pub inductance_h: T,
    pub capacitance_f: T,
    /// Quality factor of an isolated ring.
    pub unloaded_q: T,
    pub coupling: T,
    pub feed_capacitance_f: T,
    pub line_impedance_ohm: T,
}

impl<T: Scalar> CircuitParams<T> {
    pub fn new(
        inductance_h: T,
        capacitance_f: T,
        unloaded_q: T,
        coupling: T,
        feed_capacitance_f: T,
        line_impedance_ohm: T,
    ) -> Result<Self, CircuitError> {
        let p = Self {
            inductance_h,
            capacitance_f,
            unloaded_q,
            coupling,
            feed_capacitance_f,
            line_impedance_ohm,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), CircuitError> {
        let bad = |what: &str, v: T| Err(CircuitError::InvalidParams(format!("{what} (got {v})")));
        if !(self.inductance_h > T::zero()) || !self.inductance_h.is_finite() {
            return bad("inductance must be positive", self.inductance_h);
        }
        if !(self.capacitance_f > T::zero()) || !self.capacitance_f.is_finite() {
            return bad("capacitance must be positive", self.capacitance_f);
        }
        if !(self.feed_capacitance_f > T::zero()) || !self.feed_capacitance_f.is_finite() {
            return bad("feed capacitance must be positive", self.feed_capacitance_f);
        }
        if !(self.unloaded_q > T::one()) {
            return bad("unloaded Q must exceed 1", self.unloaded_q);
        }
        if !(self.coupling >= T::zero() && self.coupling < T::one()) {
            return bad("coupling must lie in [0, 1)", self.coupling);
        }
        if !(self.line_impedance_ohm > T::zero()) || !self.line_impedance_ohm.is_finite() {
            return bad("line impedance must be positive", self.line_impedance_ohm);
        }
        Ok(())
    }

    /// Derives `L`, `C` and `k` from the geometry and sets the feed per `opts.feed`.
    pub fn from_geometry(
        g: &ValidatedGeometry<T>,
        opts: &CircuitOptions<T>,
    ) -> Result<Self, CircuitError> {
        let inductance_h = loop_inductance(g);
        let capacitance_f = split_capacitance(g, opts.fringing_multiplier);
        let coupling = mutual_coupling(g.ring_radius_mm, g.ring_separation_mm, g.strip_width_mm)?;
        let placeholder = match opts.feed {
            FeedSetting::Fixed { capacitance_f } => capacitance_f,
            FeedSetting::Tuned(_) => capacitance_f * T::lit(0.1),
        };
        let p = Self::new(
            inductance_h,
            capacitance_f,
            opts.unloaded_q,
            coupling,
            placeholder,
            opts.line_impedance_ohm,
        )?;
        match opts.feed {
            FeedSetting::Fixed { .. } => Ok(p),
            FeedSetting::Tuned(mode) => tune_feed(&p, mode).map(|(tuned, _)| tuned),
        }
    }

    pub fn mutual_inductance_h(&self) -> T {
        self.coupling * self.inductance_h
    }

    /// Uncoupled ring resonance `1 / (2 pi sqrt(L C))`.
    pub fn ring_frequency_hz(&self) -> T {
        T::one() / (T::TAU() * (self.inductance_h * self.capacitance_f).sqrt())
    }

    pub fn loss_resistance_ohm(&self, frequency_hz: T) -> T {
        T::TAU() * frequency_hz * self.inductance_h / self.unloaded_q
    }

    pub fn with_feed_capacitance(mut self, c_f: T) -> Self {
        self.feed_capacitance_f = c_f;
        self
    }
}

/// Unloaded resonances of the coupled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePair<T> {
    /// In-phase ring currents; the lower mode for `k > 0`.
    pub symmetric_hz: T,
    /// Counter-phase ring currents.
    pub antisymmetric_hz: T,
}

pub fn eigenmodes<T: Scalar>(p: &CircuitParams<T>) -> ModePair<T> {
    let f0 = p.ring_frequency_hz();
    ModePair {
        symmetric_hz: f0 / (T::one() + p.coupling).sqrt(),
        antisymmetric_hz: f0 / (T::one() - p.coupling).sqrt(),
    }
}

/// Ring currents (peak phasors, amperes) at one drive frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveState<T> {
    pub frequency_hz: T,
    pub i1: Complex<T>,
    pub i2: Complex<T>,
    pub mode: PortMode,
    /// Delivered power the currents correspond to, when known.
    pub power_w: Option<T>,
}

impl<T: Scalar> DriveState<T> {
    /// Equal one-ampere currents in both rings, for per-ampere field maps.
    pub fn unit(mode: PortMode) -> Self {
        Self {
            frequency_hz: T::zero(),
            i1: Complex::new(T::one(), T::zero()),
            i2: Complex::new(T::one(), T::zero()),
            mode,
            power_w: None,
        }
    }

    pub fn currents(&self) -> [Complex<T>; 2] {
        [self.i1, self.i2]
    }

    pub fn scaled(mut self, factor: T) -> Self {
        self.i1 *= factor;
        self.i2 *= factor;
        self
    }
}

/// Bandwidth of a resonance of loaded quality `q`.
pub fn bandwidth_hz<T: Scalar>(frequency_hz: T, q: T) -> T {
    frequency_hz / q
}

/// Amplitude build-up/decay time constant `Q / (pi f0)`.
pub fn ringdown_time<T: Scalar>(q_loaded: T, f0_hz: T) -> Result<T, CircuitError> {
    if !(q_loaded > T::zero()) || !(f0_hz > T::zero()) {
        return Err(CircuitError::InvalidArgument(format!(
            "ringdown needs positive Q and frequency (got Q = {q_loaded}, f0 = {f0_hz})"
        )));
    }
    Ok(q_loaded / (T::PI() * f0_hz))
}
