//! Sensitivity budget: inhomogeneity-limited coherence, photon budget and
//! the resulting minimum detectable field.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::constants::{GAMMA_NV_HZ_PER_T, PLANCK, SPEED_OF_LIGHT};
use crate::fieldmap::InhomogeneityReport;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BudgetError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("report parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Coherence time under a drive of relative inhomogeneity `sigma` at Rabi
/// frequency `f_drive_hz`: `1 / (sqrt(2) pi sigma f)`.
pub fn coherence_time<T: Scalar>(sigma: T, f_drive_hz: T) -> Result<T, BudgetError> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(BudgetError::DegenerateInput(format!(
            "sigma must be positive and finite (got {sigma})"
        )));
    }
    if !(f_drive_hz > T::zero()) || !f_drive_hz.is_finite() {
        return Err(BudgetError::DegenerateInput(format!(
            "drive frequency must be positive and finite (got {f_drive_hz})"
        )));
    }
    Ok(T::one() / (T::SQRT_2() * T::PI() * sigma * f_drive_hz))
}

/// Detected photons per run, `P * conversion * window * lambda / (h c)`.
pub fn photon_budget<T: Scalar>(laser_power_w: T, conversion: T, window_s: T, wavelength_m: T) -> T {
    laser_power_w * conversion * window_s * wavelength_m / (T::lit(PLANCK) * T::lit(SPEED_OF_LIGHT))
}

/// Rule for the contrast remaining at `T2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContrastModel {
    /// `C(T2) = C(0) / e`.
    #[default]
    ExpDecay,
    /// `C(T2) = C(0)`.
    None,
}

impl ContrastModel {
    pub fn at_t2<T: Scalar>(self, c0: T) -> T {
        match self {
            ContrastModel::ExpDecay => c0 / T::one().exp(),
            ContrastModel::None => c0,
        }
    }
}

impl fmt::Display for ContrastModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContrastModel::ExpDecay => "exp-decay",
            ContrastModel::None => "none",
        })
    }
}

impl FromStr for ContrastModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exp-decay" => Ok(ContrastModel::ExpDecay),
            "none" => Ok(ContrastModel::None),
            other => Err(format!("unknown contrast model `{other}` (expected exp-decay or none)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optics<T> {
    pub laser_power_w: T,
    pub conversion: T,
    pub window_s: T,
    pub wavelength_m: T,
}

impl<T: Scalar> Default for Optics<T> {
    fn default() -> Self {
        Self {
            laser_power_w: T::lit(10.0),
            conversion: T::lit(0.1),
            window_s: T::lit(0.3e-6),
            wavelength_m: T::lit(700e-9),
        }
    }
}

impl<T: Scalar> Optics<T> {
    pub fn photons(&self) -> T {
        photon_budget(self.laser_power_w, self.conversion, self.window_s, self.wavelength_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityBudget<T> {
    pub gamma_nv_hz_per_t: T,
    pub alpha: T,
    pub contrast_c0: T,
    pub contrast_model: ContrastModel,
    pub n_ph: T,
    /// Taken from [`coherence_time`] when absent.
    pub t2_s: Option<T>,
    pub sigma: T,
    pub f_drive_hz: T,
}

impl<T: Scalar> SensitivityBudget<T> {
    pub fn new(sigma: T, f_drive_hz: T, n_ph: T) -> Self {
        Self {
            gamma_nv_hz_per_t: T::lit(GAMMA_NV_HZ_PER_T),
            alpha: T::lit(0.25),
            contrast_c0: T::lit(0.05),
            contrast_model: ContrastModel::default(),
            n_ph,
            t2_s: None,
            sigma,
            f_drive_hz,
        }
    }

    pub fn effective_t2(&self) -> Result<T, BudgetError> {
        match self.t2_s {
            Some(t) if t > T::zero() && t.is_finite() => Ok(t),
            Some(t) => Err(BudgetError::DegenerateInput(format!("T2 must be positive (got {t})"))),
            None => coherence_time(self.sigma, self.f_drive_hz),
        }
    }
}

/// `eta = 1 / (gamma alpha C(T2) sqrt(N_ph T2))`, tesla per sqrt(Hz).
pub fn sensitivity<T: Scalar>(b: &SensitivityBudget<T>) -> Result<T, BudgetError> {
    for (name, v) in [
        ("gamma_nv", b.gamma_nv_hz_per_t),
        ("alpha", b.alpha),
        ("contrast_c0", b.contrast_c0),
        ("n_ph", b.n_ph),
    ] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(BudgetError::DegenerateInput(format!("{name} must be positive (got {v})")));
        }
    }
    let t2 = b.effective_t2()?;
    let c = b.contrast_model.at_t2(b.contrast_c0);
    Ok(T::one() / (b.gamma_nv_hz_per_t * b.alpha * c * (b.n_ph * t2).sqrt()))
}

/// Where a budget input came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    Supplied,
    Fieldmap,
    Derived,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::Supplied => "supplied",
            Source::Fieldmap => "fieldmap",
            Source::Derived => "derived",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport<T> {
    pub budget: SensitivityBudget<T>,
    pub t2_s: T,
    pub contrast_at_t2: T,
    pub eta_t_per_sqrt_hz: T,
    /// Origin of each input, keyed by report field name.
    pub provenance: Vec<(&'static str, Source)>,
}

impl<T: Scalar> BudgetReport<T> {
    pub fn evaluate(
        budget: SensitivityBudget<T>,
        provenance: Vec<(&'static str, Source)>,
    ) -> Result<Self, BudgetError> {
        let eta = sensitivity(&budget)?;
        Ok(Self {
            t2_s: budget.effective_t2()?,
            contrast_at_t2: budget.contrast_model.at_t2(budget.contrast_c0),
            eta_t_per_sqrt_hz: eta,
            budget,
            provenance,
        })
    }

    pub fn source_of(&self, key: &str) -> Option<Source> {
        self.provenance.iter().find(|p| p.0 == key).map(|p| p.1)
    }
}

/// Chains a field-map homogeneity result into the budget with default
/// spin and contrast parameters.
pub fn budget_from_design<T: Scalar>(
    report: &InhomogeneityReport<T>,
    f_drive_hz: T,
    optics: &Optics<T>,
) -> Result<BudgetReport<T>, BudgetError> {
    let b = SensitivityBudget::new(report.sigma, f_drive_hz, optics.photons());
    BudgetReport::evaluate(
        b,
        vec![
            ("gamma_nv", Source::Default),
            ("alpha", Source::Default),
            ("contrast_c0", Source::Default),
            ("contrast_model", Source::Default),
            ("n_ph", Source::Derived),
            ("t2", Source::Derived),
            ("sigma", Source::Fieldmap),
            ("f_drive", Source::Supplied),
        ],
    )
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-3, 1e7)`.
pub fn format_value<T: Scalar>(x: T) -> String {
    let a = x.abs();
    if a != T::zero() && a.is_finite() && (a < T::lit(1e-3) || a >= T::lit(1e7)) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub const CSV_HEADER: [&str; 6] = ["sigma", "f_drive_hz", "t2_s", "n_ph", "contrast_model", "eta_t_per_sqrthz"];

pub fn csv_row<T: Scalar>(r: &BudgetReport<T>) -> [String; 6] {
    [
        format_value(r.budget.sigma),
        format_value(r.budget.f_drive_hz),
        format_value(r.t2_s),
        format_value(r.budget.n_ph),
        r.budget.contrast_model.to_string(),
        format_value(r.eta_t_per_sqrt_hz),
    ]
}

/// One `key = value unit [source]` line of a text report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub key: String,
    pub value: String,
    pub unit: String,
    pub source: Option<String>,
}

impl ReportEntry {
    pub fn number(&self) -> Option<f64> {
        self.value.parse().ok()
    }
}

pub fn write_report<T: Scalar>(r: &BudgetReport<T>) -> String {
    let b = &r.budget;
    let src = |k: &str| r.source_of(k).map(|s| format!(" [{s}]")).unwrap_or_default();
    let mut out = String::from("# sensitivity budget\n");
    let mut line = |key: &str, value: String, unit: &str, source_key: Option<&str>| {
        let s = source_key.map(src).unwrap_or_default();
        out.push_str(&format!("{key} = {value} {unit}{s}\n"));
    };
    line("gamma_nv", format_value(b.gamma_nv_hz_per_t), "Hz/T", Some("gamma_nv"));
    line("alpha", format_value(b.alpha), "1", Some("alpha"));
    line("contrast_c0", format_value(b.contrast_c0), "1", Some("contrast_c0"));
    line("contrast_model", b.contrast_model.to_string(), "-", Some("contrast_model"));
    line("contrast_t2", format_value(r.contrast_at_t2), "1", None);
    line("sigma", format_value(b.sigma), "1", Some("sigma"));
    line("f_drive", format_value(b.f_drive_hz), "Hz", Some("f_drive"));
    line("t2", format_value(r.t2_s), "s", Some("t2"));
    line("n_ph", format_value(b.n_ph), "1", Some("n_ph"));
    line("eta", format_value(r.eta_t_per_sqrt_hz), "T/Hz^0.5", None);
    out
}

pub fn parse_report(text: &str) -> Result<Vec<ReportEntry>, BudgetError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: &str| BudgetError::Parse {
            line: i + 1,
            message: m.into(),
        };
        let (key, rest) = line.split_once('=').ok_or_else(|| err("missing `=`"))?;
        let (body, source) = match rest.trim().strip_suffix(']') {
            Some(s) => {
                let (b, src) = s.rsplit_once('[').ok_or_else(|| err("unbalanced `]`"))?;
                (b.trim(), Some(src.trim().to_string()))
            }
            None => (rest.trim(), None),
        };
        let mut parts = body.split_whitespace();
        let value = parts.next().ok_or_else(|| err("missing value"))?;
        let unit = parts.next().ok_or_else(|| err("missing unit"))?;
        if parts.next().is_some() {
            return Err(err("trailing tokens"));
        }
        entries.push(ReportEntry {
            key: key.trim().to_string(),
            value: value.to_string(),
            unit: unit.to_string(),
            source,
        });
    }
    Ok(entries)
}
