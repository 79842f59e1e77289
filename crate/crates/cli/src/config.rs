//! Run configuration. Every physical quantity carries its unit in the key
//! name; keys with any other suffix are rejected as unknown.

use std::path::{Path, PathBuf};

use msrr_core::circuit::{CircuitOptions, FeedSetting, PortMode, FRINGING_MULTIPLIER};
use msrr_core::fieldmap::{FieldComponent, SamplingVolume};
use msrr_core::geometry::{DesignParameter, DiscretizeOptions, ResonatorGeometry, DEFAULT_SEGMENTS};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Option<GeometrySection>,
    #[serde(default)]
    pub circuit: CircuitSection,
    #[serde(default)]
    pub volume: VolumeSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub s11: S11Section,
    pub sweep: Option<SweepSection>,
    pub optimize: Option<OptimizeSection>,
    pub budget: Option<BudgetSection>,
    pub fit: Option<FitSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub ring_radius_mm: f64,
    pub strip_width_mm: f64,
    pub split_gap_mm: f64,
    pub feed_gap_mm: f64,
    pub ring_separation_mm: f64,
    pub substrate_permittivity: f64,
    pub conductor_thickness_um: f64,
    pub substrate_thickness_mm: f64,
}

impl From<GeometrySection> for ResonatorGeometry<f64> {
    fn from(g: GeometrySection) -> Self {
        ResonatorGeometry {
            ring_radius_mm: g.ring_radius_mm,
            strip_width_mm: g.strip_width_mm,
            split_gap_mm: g.split_gap_mm,
            feed_gap_mm: g.feed_gap_mm,
            ring_separation_mm: g.ring_separation_mm,
            substrate_permittivity: g.substrate_permittivity,
            conductor_thickness_um: g.conductor_thickness_um,
            substrate_thickness_mm: g.substrate_thickness_mm,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitSection {
    pub unloaded_q: f64,
    pub tune_feed: bool,
    /// Used when `tune_feed = false`.
    pub feed_capacitance_pf: Option<f64>,
    pub line_impedance_ohm: f64,
    pub fringing_multiplier: f64,
}

impl Default for CircuitSection {
    fn default() -> Self {
        let d = CircuitOptions::<f64>::default();
        Self {
            unloaded_q: d.unloaded_q,
            tune_feed: true,
            feed_capacitance_pf: None,
            line_impedance_ohm: d.line_impedance_ohm,
            fringing_multiplier: FRINGING_MULTIPLIER,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolumeSection {
    pub diameter_mm: f64,
    pub height_mm: f64,
    /// Radial, azimuthal and axial node counts.
    pub grid: [usize; 3],
    pub curve_diameters_mm: Vec<f64>,
    pub segments: usize,
    pub include_gaps: bool,
    pub component: String,
}

impl Default for VolumeSection {
    fn default() -> Self {
        let v = SamplingVolume::<f64>::default();
        Self {
            diameter_mm: v.diameter_mm,
            height_mm: v.height_mm,
            grid: [v.n_r, v.n_phi, v.n_z],
            curve_diameters_mm: vec![0.1, 0.3, 0.5, 0.8, 1.0, 1.5],
            segments: DEFAULT_SEGMENTS,
            include_gaps: false,
            component: "z".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    pub mode: String,
    pub power_w: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self {
            mode: "dual".into(),
            power_w: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct S11Section {
    pub start_ghz: f64,
    pub stop_ghz: f64,
    pub points: usize,
}

impl Default for S11Section {
    fn default() -> Self {
        Self {
            start_ghz: 1.5,
            stop_ghz: 5.0,
            points: 3501,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub start_mm: f64,
    pub stop_mm: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub parameter: String,
    pub min_mm: f64,
    pub max_mm: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub target_ghz: f64,
    pub tolerance_mhz: f64,
    #[serde(default)]
    pub field_weight: f64,
    #[serde(default)]
    pub sigma_weight: f64,
    #[serde(default = "one")]
    pub frequency_penalty: f64,
    pub sigma_cap: Option<f64>,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    pub bounds: Vec<BoundSection>,
}

fn one() -> f64 {
    1.0
}

fn default_iterations() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    /// Taken from the field map of `[geometry]` when absent.
    pub sigma: Option<f64>,
    pub f_drive_khz: f64,
    pub laser_power_w: Option<f64>,
    pub conversion: Option<f64>,
    pub window_us: Option<f64>,
    pub wavelength_nm: Option<f64>,
    pub gamma_nv_ghz_per_t: Option<f64>,
    pub alpha: Option<f64>,
    pub contrast_c0: Option<f64>,
    pub contrast_model: Option<String>,
    pub t2_us: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Trace CSV, relative to the config file.
    pub input: PathBuf,
    /// Resonance frequency for converting a ring-down time to Q.
    pub f0_ghz: Option<f64>,
}

/// Raw text plus the parsed form, so the manifest can hash exactly what was read.
pub struct LoadedConfig {
    pub path: PathBuf,
    pub text: String,
    pub config: RunConfig,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let config = parse(&text)?;
        Ok(Self {
            path: path.to_path_buf(),
            text,
            config,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        self.path.parent().map(|d| d.join(p)).unwrap_or_else(|| p.to_path_buf())
    }
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let msg = e.message().to_string();
        CliError::Config {
            key: backticked(&msg),
            line,
            message: msg,
        }
    })
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

pub fn config_error(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: Some(key.into()),
        line: None,
        message: message.into(),
    }
}

pub fn parameter(key: &str, s: &str) -> Result<DesignParameter, CliError> {
    DesignParameter::parse(s).ok_or_else(|| config_error(key, format!("unknown design parameter `{s}`")))
}

impl RunConfig {
    pub fn geometry(&self) -> Result<ResonatorGeometry<f64>, CliError> {
        self.geometry
            .map(Into::into)
            .ok_or_else(|| config_error("geometry", "missing section `[geometry]`"))
    }

    pub fn mode(&self) -> Result<PortMode, CliError> {
        self.drive.mode.parse().map_err(|_| config_error("drive.mode", format!("expected `single` or `dual`, got `{}`", self.drive.mode)))
    }

    pub fn component(&self) -> Result<FieldComponent, CliError> {
        self.volume
            .component
            .parse()
            .map_err(|_| config_error("volume.component", format!("unknown field component `{}`", self.volume.component)))
    }

    pub fn circuit_options(&self, mode: PortMode) -> Result<CircuitOptions<f64>, CliError> {
        let c = &self.circuit;
        let feed = match (c.tune_feed, c.feed_capacitance_pf) {
            (true, _) => FeedSetting::Tuned(mode),
            (false, Some(pf)) => FeedSetting::Fixed { capacitance_f: pf * 1e-12 },
            (false, None) => return Err(config_error("circuit.feed_capacitance_pf", "required when `tune_feed = false`")),
        };
        Ok(CircuitOptions {
            unloaded_q: c.unloaded_q,
            line_impedance_ohm: c.line_impedance_ohm,
            fringing_multiplier: c.fringing_multiplier,
            feed,
        })
    }

    pub fn volume(&self, diameter_mm: f64) -> SamplingVolume<f64> {
        let [n_r, n_phi, n_z] = self.volume.grid;
        SamplingVolume {
            diameter_mm,
            height_mm: self.volume.height_mm,
            ..SamplingVolume::default()
        }
        .with_grid(n_r, n_phi, n_z)
    }

    pub fn discretize(&self) -> DiscretizeOptions<f64> {
        DiscretizeOptions::default()
            .with_segments(self.volume.segments)
            .with_gaps(self.volume.include_gaps)
    }

    pub fn drive_power(&self) -> Result<f64, CliError> {
        let p = self.drive.power_w;
        if p > 0.0 && p.is_finite() {
            Ok(p)
        } else {
            Err(config_error("drive.power_w", format!("must be positive, got {p}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GEOMETRY: &str = "[geometry]\nring_radius_mm = 2.9\nstrip_width_mm = 1.0\nsplit_gap_mm = 0.4\nfeed_gap_mm = 0.1\nring_separation_mm = 2.2\nsubstrate_permittivity = 10.2\nconductor_thickness_um = 35.0\nsubstrate_thickness_mm = 1.27\n";

    #[test]
    fn reference_geometry_parses() {
        let c = parse(GEOMETRY).unwrap();
        assert_eq!(c.geometry().unwrap(), ResonatorGeometry::reference());
        assert_eq!(c.mode().unwrap(), PortMode::Dual);
    }

    #[test]
    fn missing_key_is_named() {
        let text = GEOMETRY.replace("ring_separation_mm = 2.2\n", "");
        match parse(&text) {
            Err(CliError::Config { key, line, .. }) => {
                assert_eq!(key.as_deref(), Some("ring_separation_mm"));
                assert_eq!(line, Some(1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unit_less_or_foreign_unit_keys_rejected() {
        for bad in ["ring_radius = 2.9", "ring_radius_cm = 0.29"] {
            let text = format!("{GEOMETRY}{bad}\n");
            match parse(&text) {
                Err(CliError::Config { key, line, .. }) => {
                    assert_eq!(key.as_deref(), Some(bad.split(' ').next().unwrap()));
                    assert_eq!(line, Some(10));
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn bad_mode_reports_key() {
        let c = parse(&format!("{GEOMETRY}[drive]\nmode = \"triple\"\n")).unwrap();
        assert!(matches!(c.mode(), Err(CliError::Config { key: Some(k), .. }) if k == "drive.mode"));
    }
}
