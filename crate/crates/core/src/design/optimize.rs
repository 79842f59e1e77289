use crate::circuit::{eigenmodes, CircuitParams};
use crate::fieldmap::{field_per_sqrt_watt_with, SamplingVolume};
use crate::geometry::{DesignParameter, ResonatorGeometry, ValidatedGeometry};
use crate::numeric::{nelder_mead, SimplexOptions};
use crate::Scalar;

use super::{evaluate_design, DesignError, DesignPoint, EvaluationSettings};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBounds<T> {
    pub parameter: DesignParameter,
    pub min_mm: T,
    pub max_mm: T,
}

/// Score `-w_field * mean + w_sigma * sigma + penalty * max(0, |f - f_t| - tol)^2`
/// with frequencies in MHz. Only the parameters listed in `bounds` move.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignObjective<T> {
    pub target_hz: T,
    pub tolerance_hz: T,
    pub field_weight: T,
    pub sigma_weight: T,
    pub frequency_penalty: T,
    /// Largest acceptable sigma for a feasible design.
    pub sigma_cap: T,
    pub bounds: Vec<ParameterBounds<T>>,
}

impl<T: Scalar> DesignObjective<T> {
    /// Pure frequency targeting over the ring radius.
    pub fn frequency_only(target_hz: T, tolerance_hz: T, bounds: Vec<ParameterBounds<T>>) -> Self {
        Self {
            target_hz,
            tolerance_hz,
            field_weight: T::zero(),
            sigma_weight: T::zero(),
            frequency_penalty: T::one(),
            sigma_cap: T::infinity(),
            bounds,
        }
    }

    fn validate(&self) -> Result<(), DesignError> {
        let bad = |m: &str| Err(DesignError::InvalidObjective(m.into()));
        if !(self.field_weight >= T::zero()) || !(self.sigma_weight >= T::zero()) {
            return bad("weights must be non-negative");
        }
        if !(self.frequency_penalty >= T::zero()) {
            return bad("frequency penalty must be non-negative");
        }
        if !(self.tolerance_hz > T::zero()) {
            return bad("frequency tolerance must be positive");
        }
        if !(self.target_hz > T::zero()) {
            return bad("target frequency must be positive");
        }
        if !(self.sigma_cap > T::zero()) {
            return bad("sigma cap must be positive");
        }
        if self.bounds.is_empty() {
            return bad("at least one parameter must be free");
        }
        for (i, b) in self.bounds.iter().enumerate() {
            if !(b.min_mm < b.max_mm) {
                return Err(DesignError::InvalidObjective(format!(
                    "bounds for {} are empty",
                    b.parameter
                )));
            }
            if self.bounds[..i].iter().any(|o| o.parameter == b.parameter) {
                return Err(DesignError::InvalidObjective(format!(
                    "{} listed twice",
                    b.parameter
                )));
            }
        }
        Ok(())
    }

    fn needs_field(&self) -> bool {
        self.field_weight > T::zero() || self.sigma_weight > T::zero() || self.sigma_cap.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry<T> {
    /// Evaluation counter, from 0.
    pub iteration: usize,
    pub parameters: Vec<T>,
    pub score: T,
    pub feasible: bool,
    /// Lowest score seen so far, including this entry.
    pub best_score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult<T> {
    pub geometry: ValidatedGeometry<T>,
    pub score: T,
    /// Re-evaluated on the full sampling grid.
    pub design: DesignPoint<T>,
    pub trace: Vec<TraceEntry<T>>,
    pub converged: bool,
}

struct Candidate<T> {
    score: T,
    feasible: bool,
}

fn score_candidate<T: Scalar>(
    obj: &DesignObjective<T>,
    g: &ResonatorGeometry<T>,
    x: &[T],
    settings: &EvaluationSettings<T>,
    coarse: &SamplingVolume<T>,
) -> Candidate<T> {
    let infeasible = Candidate {
        score: T::infinity(),
        feasible: false,
    };
    let in_bounds = obj
        .bounds
        .iter()
        .zip(x)
        .all(|(b, &v)| v >= b.min_mm && v <= b.max_mm);
    if !in_bounds {
        return infeasible;
    }
    let Ok(vg) = g.validate() else {
        return infeasible;
    };
    let Ok(p) = CircuitParams::from_geometry(&vg, &settings.circuit_for_mode()) else {
        return infeasible;
    };
    let f = eigenmodes(&p).symmetric_hz;
    let (mean, sigma) = if obj.needs_field() {
        match field_per_sqrt_watt_with(&vg, &p, coarse, settings.mode, &settings.discretize) {
            Ok(e) => (e.mean_bz_gauss_per_sqrt_w, e.sigma),
            Err(_) => return infeasible,
        }
    } else {
        (T::zero(), T::zero())
    };
    let mhz = T::lit(1e6);
    let excess = ((f - obj.target_hz).abs() - obj.tolerance_hz).max(T::zero()) / mhz;
    let score = -obj.field_weight * mean + obj.sigma_weight * sigma + obj.frequency_penalty * excess * excess;
    Candidate {
        score,
        feasible: sigma <= obj.sigma_cap && (f - obj.target_hz).abs() <= obj.tolerance_hz,
    }
}

/// Nelder-Mead search over the bounded parameters. Homogeneity inside the
/// loop uses a 9 x 8 x 9 grid; the returned design is re-evaluated on the
/// full grid. The best feasible candidate is returned.
pub fn optimize_design<T: Scalar>(
    obj: &DesignObjective<T>,
    start: &ValidatedGeometry<T>,
    settings: &EvaluationSettings<T>,
    max_iterations: usize,
) -> Result<OptimizeResult<T>, DesignError> {
    obj.validate()?;
    let x0: Vec<T> = obj.bounds.iter().map(|b| start.parameter(b.parameter)).collect();
    for (b, &v) in obj.bounds.iter().zip(&x0) {
        if v < b.min_mm || v > b.max_mm {
            return Err(DesignError::InvalidObjective(format!(
                "start value {v} mm for {} lies outside [{}, {}]",
                b.parameter, b.min_mm, b.max_mm
            )));
        }
    }
    let coarse = settings.volume.with_grid(9, 8, 9);
    let build = |x: &[T]| {
        obj.bounds
            .iter()
            .zip(x)
            .fold(*start.get(), |g, (b, &v)| g.with_parameter(b.parameter, v))
    };

    let mut trace: Vec<TraceEntry<T>> = Vec::new();
    let mut best: Option<(T, Vec<T>)> = None;
    let objective = |x: &[T]| {
        let c = score_candidate(obj, &build(x), x, settings, &coarse);
        let prev = trace.last().map(|t| t.best_score).unwrap_or(T::infinity());
        let best_score = if c.score < prev { c.score } else { prev };
        if c.feasible && best.as_ref().is_none_or(|(s, _)| c.score < *s) {
            best = Some((c.score, x.to_vec()));
        }
        trace.push(TraceEntry {
            iteration: trace.len(),
            parameters: x.to_vec(),
            score: c.score,
            feasible: c.feasible,
            best_score,
        });
        c.score
    };
    let step: Vec<T> = obj
        .bounds
        .iter()
        .zip(&x0)
        .map(|(b, &v)| {
            let s = v * T::lit(0.05);
            let room = (b.max_mm - v).max(v - b.min_mm);
            if v + s <= b.max_mm || room <= T::zero() {
                s
            } else {
                -s
            }
        })
        .collect();
    let opts = SimplexOptions {
        max_iterations,
        f_tol: T::lit(1e-10),
        x_tol: T::lit(1e-6),
        initial_step: step,
    };
    let result = nelder_mead(objective, &x0, &opts);

    let Some((score, x)) = best else {
        return Err(DesignError::NoFeasiblePoint {
            evaluations: trace.len(),
        });
    };
    let geometry = build(&x).validate()?;
    let design = evaluate_design(&geometry, settings)?;
    Ok(OptimizeResult {
        geometry,
        score,
        design,
        trace,
        converged: result.converged,
    })
}
