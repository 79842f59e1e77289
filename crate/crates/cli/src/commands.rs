use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use msrr_core::budget::{
    csv_row, write_report, BudgetReport, ContrastModel, Optics, SensitivityBudget, Source, CSV_HEADER,
};
use msrr_core::circuit::{
    eigenmodes, loaded_resonance, ringdown_time, s11_spectrum, CircuitParams, PortMode,
};
use msrr_core::design::{
    optimize_design, sweep, DesignObjective, EvaluationSettings, ParameterBounds, SweepSpec,
};
use msrr_core::fieldmap::{
    drive_for_power, evaluate_field_grid_with, field_per_sqrt_watt_with, homogeneity, sparse_sampled_for_geometry,
    SparseSampling,
};
use msrr_core::geometry::{ResonatorGeometry, ValidatedGeometry};
use msrr_core::metrology::{fit_rabi, fit_ringdown, fit_s11_dip, rabi_to_field, RingdownDirection, TimeTrace};

use crate::config::{config_error, parameter, LoadedConfig, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, OutputDir, Report, Table};

pub struct Overrides {
    pub grid: Option<[usize; 3]>,
    pub ports: Option<PortMode>,
}

impl Overrides {
    pub fn apply(&self, c: &mut RunConfig) {
        if let Some(g) = self.grid {
            c.volume.grid = g;
        }
        if let Some(m) = self.ports {
            c.drive.mode = m.to_string();
        }
    }

    pub fn describe(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        if let Some([a, b, c]) = self.grid {
            m.insert("grid".into(), format!("{a},{b},{c}"));
        }
        if let Some(p) = self.ports {
            m.insert("ports".into(), p.to_string());
        }
        m
    }
}

fn validated(c: &RunConfig) -> Result<ValidatedGeometry<f64>, CliError> {
    Ok(c.geometry()?.validate()?)
}

fn circuit(c: &RunConfig, g: &ValidatedGeometry<f64>, mode: PortMode) -> Result<CircuitParams<f64>, CliError> {
    Ok(CircuitParams::from_geometry(g, &c.circuit_options(mode)?)?)
}

pub fn simulate(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let c = &cfg.config;
    let g = validated(c)?;
    let mode = c.mode()?;
    let component = c.component()?;
    let power = c.drive_power()?;
    let disc = c.discretize();
    let p = circuit(c, &g, mode)?;
    let modes = eigenmodes(&p);
    let res = loaded_resonance(&p, mode)?;

    let s11 = &c.s11;
    if s11.points < 2 || !(s11.stop_ghz > s11.start_ghz) || !(s11.start_ghz > 0.0) {
        return Err(config_error("s11", "need 0 < start_ghz < stop_ghz and at least 2 points"));
    }
    let freqs: Vec<f64> = (0..s11.points)
        .map(|i| (s11.start_ghz + (s11.stop_ghz - s11.start_ghz) * i as f64 / (s11.points - 1) as f64) * 1e9)
        .collect();
    let spectrum = out.timed("s11", || s11_spectrum(&p, &freqs, mode));
    let mut table = Table::new(["freq_hz", "s11_re", "s11_im", "s11_db"]);
    for (f, s) in freqs.iter().zip(&spectrum) {
        table.push([f.cell(), s.re.cell(), s.im.cell(), (20.0 * s.norm().log10()).cell()]);
    }
    out.write_csv("s11.csv", table)?;

    let vol = c.volume(c.volume.diameter_mm);
    let (mut drive, _) = drive_for_power(&p, mode, power)?;
    drive.power_w = None;
    let map = out.timed("fieldmap", || evaluate_field_grid_with(&g, &drive, &vol, &disc))?;
    let mut table = Table::new(["x_mm", "y_mm", "z_mm", "bx_gauss", "by_gauss", "bz_gauss"]);
    for s in &map.samples {
        let [x, y, z] = s.position_mm;
        let [bx, by, bz] = s.b_gauss;
        table.push([x, y, z, bx, by, bz]);
    }
    out.write_csv("fieldmap.csv", table)?;
    let grid_report = homogeneity(&map, component)?;

    let other = match mode {
        PortMode::Dual => PortMode::Single,
        PortMode::Single => PortMode::Dual,
    };
    let p_other = circuit(c, &g, other)?;
    let curve = out.timed("homogeneity", || -> Result<Vec<[f64; 4]>, CliError> {
        let mut rows = Vec::new();
        for &d in &c.volume.curve_diameters_mm {
            let v = c.volume(d);
            let here = field_per_sqrt_watt_with(&g, &p, &v, mode, &disc)?;
            let there = field_per_sqrt_watt_with(&g, &p_other, &v, other, &disc)?;
            let (dual, single) = match mode {
                PortMode::Dual => (here.sigma, there.sigma),
                PortMode::Single => (there.sigma, here.sigma),
            };
            rows.push([d, dual, single, here.mean_bz_gauss_per_sqrt_w]);
        }
        Ok(rows)
    })?;
    let mut table = Table::new(["diameter_mm", "sigma_dual", "sigma_single", "mean_bz_gauss_per_sqrtw"]);
    for r in curve {
        table.push(r);
    }
    out.write_csv("homogeneity.csv", table)?;

    let eff = field_per_sqrt_watt_with(&g, &p, &vol, mode, &disc)?;
    let sparse = sparse_sampled_for_geometry(
        &g,
        &drive,
        &SparseSampling::for_diameter(vol.diameter_mm, vol.height_mm),
        component,
        &disc,
    )?;
    let mut r = Report::new("simulation summary");
    r.line("mode", mode, "-");
    r.line("inductance", p.inductance_h, "H");
    r.line("capacitance", p.capacitance_f, "F");
    r.line("coupling", p.coupling, "1");
    r.line("feed_capacitance", p.feed_capacitance_f, "F");
    r.line("f_sym", modes.symmetric_hz, "Hz");
    r.line("f_anti", modes.antisymmetric_hz, "Hz");
    r.line("f_loaded", res.peak_hz, "Hz");
    r.line("min_s11", res.min_s11, "1");
    r.line("bandwidth", res.bandwidth_hz, "Hz");
    r.line("q_loaded", res.loaded_q, "1");
    r.line("ringdown", ringdown_time(res.loaded_q, res.peak_hz)?, "s");
    r.line("power", power, "W");
    r.line("i1", drive.i1.norm(), "A");
    r.line("i2", drive.i2.norm(), "A");
    r.line("component", component, "-");
    r.line("volume_diameter", vol.diameter_mm, "mm");
    r.line("volume_height", vol.height_mm, "mm");
    r.line("mean_field", grid_report.mean_gauss, "G");
    r.line("mean_bz_per_sqrtw", eff.mean_bz_gauss_per_sqrt_w, "G/W^0.5");
    r.line("sigma_grid", grid_report.sigma, "1");
    r.line("sigma_sparse_sampled", sparse.sigma, "1");
    out.write("summary.txt", &r.into_bytes())?;
    Ok(())
}

fn settings(c: &RunConfig) -> Result<EvaluationSettings<f64>, CliError> {
    let mode = c.mode()?;
    Ok(EvaluationSettings {
        circuit: c.circuit_options(mode)?,
        volume: c.volume(c.volume.diameter_mm),
        mode,
        discretize: c.discretize(),
    })
}

pub fn run_sweep(cfg: &LoadedConfig, out: &mut OutputDir, quiet: bool) -> Result<(), CliError> {
    let c = &cfg.config;
    let s = c.sweep.as_ref().ok_or_else(|| config_error("sweep", "missing section `[sweep]`"))?;
    let spec = SweepSpec {
        parameter: parameter("sweep.parameter", &s.parameter)?,
        start_mm: s.start_mm,
        stop_mm: s.stop_mm,
        count: s.count,
        base: c.geometry()?,
    };
    let settings = settings(c)?;
    let rows = out.timed("sweep", || sweep(&spec, &settings))?;
    let mut table = Table::new(["param", "value_mm", "f_sym_mhz", "f_anti_mhz", "mean_field_g_per_sqrtw", "sigma"]);
    for row in rows {
        match row.outcome {
            Ok(p) => table.push([
                row.parameter.cell(),
                row.value_mm.cell(),
                (p.f_sym_hz / 1e6).cell(),
                (p.f_anti_hz / 1e6).cell(),
                p.mean_field_g_per_sqrt_w.cell(),
                p.sigma.cell(),
            ]),
            Err(e) => {
                if !quiet {
                    eprintln!("{}", serde_json::json!({"warning": "SweepRowFailed", "value_mm": row.value_mm, "message": e}));
                }
                table.push([row.parameter.cell(), row.value_mm.cell(), String::new(), String::new(), String::new(), String::new()]);
            }
        }
    }
    out.write_csv("sweep.csv", table)
}

pub fn optimize(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let c = &cfg.config;
    let o = c.optimize.as_ref().ok_or_else(|| config_error("optimize", "missing section `[optimize]`"))?;
    let bounds = o
        .bounds
        .iter()
        .map(|b| {
            Ok(ParameterBounds {
                parameter: parameter("optimize.bounds.parameter", &b.parameter)?,
                min_mm: b.min_mm,
                max_mm: b.max_mm,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let obj = DesignObjective {
        target_hz: o.target_ghz * 1e9,
        tolerance_hz: o.tolerance_mhz * 1e6,
        field_weight: o.field_weight,
        sigma_weight: o.sigma_weight,
        frequency_penalty: o.frequency_penalty,
        sigma_cap: o.sigma_cap.unwrap_or(f64::INFINITY),
        bounds: bounds.clone(),
    };
    let start = validated(c)?;
    let settings = settings(c)?;
    let res = out.timed("optimize", || optimize_design(&obj, &start, &settings, o.max_iterations))?;

    let mut header = vec!["iteration".to_string()];
    header.extend(bounds.iter().map(|b| format!("{}_mm", b.parameter)));
    header.extend(["score", "feasible", "best_score"].map(String::from));
    let mut table = Table::new(header);
    for t in &res.trace {
        let mut row = vec![t.iteration.cell()];
        row.extend(t.parameters.iter().map(|v| v.cell()));
        row.extend([t.score.cell(), t.feasible.cell(), t.best_score.cell()]);
        table.push(row);
    }
    out.write_csv("optimize_trace.csv", table)?;

    let g: &ResonatorGeometry<f64> = res.geometry.get();
    let mut r = Report::new("optimum");
    r.line("ring_radius", g.ring_radius_mm, "mm");
    r.line("strip_width", g.strip_width_mm, "mm");
    r.line("split_gap", g.split_gap_mm, "mm");
    r.line("feed_gap", g.feed_gap_mm, "mm");
    r.line("ring_separation", g.ring_separation_mm, "mm");
    r.line("score", res.score, "1");
    r.line("f_sym", res.design.f_sym_hz, "Hz");
    r.line("f_anti", res.design.f_anti_hz, "Hz");
    r.line("mean_field", res.design.mean_field_g_per_sqrt_w, "G/W^0.5");
    r.line("sigma", res.design.sigma, "1");
    r.line("evaluations", res.trace.len(), "-");
    r.line("converged", res.converged, "-");
    out.write("optimum.txt", &r.into_bytes())
}

/// Two-column numeric CSV with the given header names.
pub fn read_pairs(path: &Path, columns: [&str; 2]) -> Result<Vec<(f64, f64)>, CliError> {
    let shown = path.display().to_string();
    let input = |line: usize, message: String| CliError::Input {
        path: shown.clone(),
        line,
        message,
    };
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io {
            path: shown.clone(),
            message: e.to_string(),
        })?;
    let header = rd.headers().map_err(|e| input(1, e.to_string()))?.clone();
    if header.len() != 2 || header.get(0) != Some(columns[0]) || header.get(1) != Some(columns[1]) {
        return Err(input(1, format!("expected header `{},{}`", columns[0], columns[1])));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| input(e.position().map(|p| p.line() as usize).unwrap_or(0), e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let num = |i: usize| -> Result<f64, CliError> {
            let s = rec.get(i).unwrap_or("");
            s.parse().map_err(|_| input(line, format!("`{s}` is not a number")))
        };
        out.push((num(0)?, num(1)?));
    }
    Ok(out)
}

fn fit_input(cfg: &LoadedConfig) -> Result<std::path::PathBuf, CliError> {
    let f = cfg.config.fit.as_ref().ok_or_else(|| config_error("fit", "missing section `[fit]`"))?;
    Ok(cfg.resolve(&f.input))
}

pub fn fit_rabi_cmd(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let pairs = read_pairs(&fit_input(cfg)?, ["time_s", "value"])?;
    let trace = TimeTrace::from_pairs(&pairs)?;
    let fit = out.timed("fit", || fit_rabi(&trace))?;
    let p = fit.params;
    let field = rabi_to_field(p.frequency_hz)?;
    let sig = fit.uncertainty;
    let opt = |v: Option<f64>| v.map(|x| x.cell()).unwrap_or_default();
    let mut table = Table::new([
        "frequency_hz",
        "frequency_sigma_hz",
        "decay_time_s",
        "amplitude",
        "offset",
        "phase_rad",
        "residual_rms",
        "decay_at_bound",
        "field_gauss",
    ]);
    table.push([
        p.frequency_hz.cell(),
        opt(sig.map(|s| s.frequency_hz)),
        p.decay_time_s.cell(),
        p.amplitude.cell(),
        p.offset.cell(),
        p.phase_rad.cell(),
        fit.residual_rms.cell(),
        fit.decay_at_bound.cell(),
        field.cell(),
    ]);
    out.write_csv("rabi_fit.csv", table)?;
    let mut r = Report::new("rabi fit");
    r.line("frequency", p.frequency_hz, "Hz");
    if let Some(s) = sig {
        r.line("frequency_sigma", s.frequency_hz, "Hz");
        r.line("decay_time_sigma", s.decay_time_s, "s");
    }
    r.line("decay_time", p.decay_time_s, "s");
    r.line("decay_at_bound", fit.decay_at_bound, "-");
    r.line("amplitude", p.amplitude, "1");
    r.line("offset", p.offset, "1");
    r.line("phase", p.phase_rad, "rad");
    r.line("residual_rms", fit.residual_rms, "1");
    r.line("field", field, "G");
    out.write("rabi_fit.txt", &r.into_bytes())
}

pub fn fit_s11_cmd(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let pairs = read_pairs(&fit_input(cfg)?, ["freq_hz", "s11_db"])?;
    let fit = out.timed("fit", || fit_s11_dip(&pairs))?;
    let mut table = Table::new(["f0_hz", "f0_sigma_hz", "q_loaded", "q_sigma", "depth_db", "fwhm_hz", "residual_rms"]);
    let opt = |v: Option<f64>| v.map(|x| x.cell()).unwrap_or_default();
    table.push([
        fit.f0_hz.cell(),
        opt(fit.f0_sigma_hz),
        fit.q_loaded.cell(),
        opt(fit.q_sigma),
        fit.depth_db.cell(),
        fit.fwhm_hz.cell(),
        fit.residual_rms.cell(),
    ]);
    out.write_csv("s11_fit.csv", table)?;
    let mut r = Report::new("s11 dip fit");
    r.line("f0", fit.f0_hz, "Hz");
    if let Some(v) = fit.f0_sigma_hz {
        r.line("f0_sigma", v, "Hz");
    }
    r.line("q_loaded", fit.q_loaded, "1");
    if let Some(v) = fit.q_sigma {
        r.line("q_sigma", v, "1");
    }
    r.line("depth", fit.depth_db, "dB");
    r.line("fwhm", fit.fwhm_hz, "Hz");
    r.line("ringdown", ringdown_time(fit.q_loaded, fit.f0_hz)?, "s");
    r.line("residual_rms", fit.residual_rms, "dB");
    out.write("s11_fit.txt", &r.into_bytes())
}

pub fn fit_ringdown_cmd(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let pairs = read_pairs(&fit_input(cfg)?, ["time_s", "value"])?;
    let trace = TimeTrace::from_pairs(&pairs)?;
    let fit = out.timed("fit", || fit_ringdown(&trace))?;
    let f0 = cfg.config.fit.as_ref().and_then(|f| f.f0_ghz).map(|g| g * 1e9);
    let q = f0.map(|f| PI * f * fit.tau_s);
    let direction = match fit.direction {
        RingdownDirection::BuildUp => "build-up",
        RingdownDirection::Decay => "decay",
    };
    let mut table = Table::new([
        "tau_s",
        "tau_sigma_s",
        "amplitude",
        "direction",
        "residual_rms",
        "poorly_constrained",
        "short_trace",
        "q_loaded",
    ]);
    table.push([
        fit.tau_s.cell(),
        fit.tau_sigma_s.cell(),
        fit.amplitude.cell(),
        direction.cell(),
        fit.residual_rms.cell(),
        fit.poorly_constrained.cell(),
        fit.short_trace.cell(),
        q.map(|q| q.cell()).unwrap_or_default(),
    ]);
    out.write_csv("ringdown_fit.csv", table)?;
    let mut r = Report::new("ring-down fit");
    r.line("tau", fit.tau_s, "s");
    r.line("tau_sigma", fit.tau_sigma_s, "s");
    r.line("direction", direction, "-");
    r.line("amplitude", fit.amplitude, "1");
    r.line("residual_rms", fit.residual_rms, "1");
    r.line("poorly_constrained", fit.poorly_constrained, "-");
    r.line("short_trace", fit.short_trace, "-");
    if let (Some(f), Some(q)) = (f0, q) {
        r.line("f0", f, "Hz");
        r.line("q_loaded", q, "1");
    }
    out.write("ringdown_fit.txt", &r.into_bytes())
}

pub fn budget(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let c = &cfg.config;
    let b = c.budget.as_ref().ok_or_else(|| config_error("budget", "missing section `[budget]`"))?;
    let src = |supplied: bool| if supplied { Source::Supplied } else { Source::Default };
    let d = Optics::<f64>::default();
    let optics = Optics {
        laser_power_w: b.laser_power_w.unwrap_or(d.laser_power_w),
        conversion: b.conversion.unwrap_or(d.conversion),
        window_s: b.window_us.map(|u| u * 1e-6).unwrap_or(d.window_s),
        wavelength_m: b.wavelength_nm.map(|n| n * 1e-9).unwrap_or(d.wavelength_m),
    };
    let (sigma, sigma_src) = match b.sigma {
        Some(s) => (s, Source::Supplied),
        None => {
            let g = validated(c)?;
            let mode = c.mode()?;
            let p = circuit(c, &g, mode)?;
            let vol = c.volume(c.volume.diameter_mm);
            let eff = out.timed("fieldmap", || field_per_sqrt_watt_with(&g, &p, &vol, mode, &c.discretize()))?;
            (eff.sigma, Source::Fieldmap)
        }
    };
    let mut budget = SensitivityBudget::new(sigma, b.f_drive_khz * 1e3, optics.photons());
    if let Some(v) = b.gamma_nv_ghz_per_t {
        budget.gamma_nv_hz_per_t = v * 1e9;
    }
    if let Some(v) = b.alpha {
        budget.alpha = v;
    }
    if let Some(v) = b.contrast_c0 {
        budget.contrast_c0 = v;
    }
    if let Some(m) = &b.contrast_model {
        budget.contrast_model = m
            .parse::<ContrastModel>()
            .map_err(|_| config_error("budget.contrast_model", format!("expected `exp-decay` or `none`, got `{m}`")))?;
    }
    budget.t2_s = b.t2_us.map(|u| u * 1e-6);
    let optics_supplied = b.laser_power_w.is_some() || b.conversion.is_some() || b.window_us.is_some() || b.wavelength_nm.is_some();
    let provenance = vec![
        ("gamma_nv", src(b.gamma_nv_ghz_per_t.is_some())),
        ("alpha", src(b.alpha.is_some())),
        ("contrast_c0", src(b.contrast_c0.is_some())),
        ("contrast_model", src(b.contrast_model.is_some())),
        ("n_ph", if optics_supplied { Source::Derived } else { Source::Default }),
        ("t2", if b.t2_us.is_some() { Source::Supplied } else { Source::Derived }),
        ("sigma", sigma_src),
        ("f_drive", Source::Supplied),
    ];
    let report = BudgetReport::evaluate(budget, provenance)?;
    let mut table = Table::new(CSV_HEADER);
    table.push(csv_row(&report));
    out.write_csv("budget.csv", table)?;
    out.write("budget.txt", write_report(&report).as_bytes())
}
