//! Lyapunov values, per-step error terms, certificates, rate fits and estimate sequences.

mod estimate;
mod formulas;

pub use estimate::{
    continuous_estimate_sequence, from_estimate_sequence, to_estimate_sequence, verify_estimate_sequence, ContinuousEstimateReport,
    EstimateSequence, EstimateVerification, PhiForm, RoundTrip,
};
pub use formulas::{evaluate_error_terms, resolve_params, ErrorFormula, FormulaParams};
pub use crate::methods::{schedule_feasibility, FeasibilityCondition, FeasibilityReport};

use crate::geometry::GeneratorKind;
use crate::methods::{GradientMapSpec, MethodId, ScheduleKind, Trace};
use crate::problems::ReferenceSolution;
use crate::{LabError, Result};
use serde::{Deserialize, Serialize};

/// The five Lyapunov functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovKind {
    /// `D_h(x*, z_k) + A_k(f(x_k) − f*)`.
    WeakX,
    /// `D_h(x*, z_k) + A_k(f(y_k) − f*)`.
    WeakY,
    /// `A_k(μD_h(x*, z_k) + f(x_k) − f*)`.
    StrongX,
    /// `A_k(μD_h(x*, z_k) + f(y_k) − f*)`.
    StrongY,
    /// `A_k(f(x_k) − f*)`.
    ValueOnly,
}

impl LyapunovKind {
    pub fn name(&self) -> &'static str {
        match self {
            LyapunovKind::WeakX => "weak_x",
            LyapunovKind::WeakY => "weak_y",
            LyapunovKind::StrongX => "strong_x",
            LyapunovKind::StrongY => "strong_y",
            LyapunovKind::ValueOnly => "value_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "weak_x" => Ok(LyapunovKind::WeakX),
            "weak_y" => Ok(LyapunovKind::WeakY),
            "strong_x" => Ok(LyapunovKind::StrongX),
            "strong_y" => Ok(LyapunovKind::StrongY),
            "value_only" => Ok(LyapunovKind::ValueOnly),
            _ => Err(LabError::ConfigError(format!("unknown Lyapunov kind '{s}'"))),
        }
    }

    fn uses_y(&self) -> bool {
        matches!(self, LyapunovKind::WeakY | LyapunovKind::StrongY)
    }

    /// Which methods each kind applies to.
    pub fn compatible_with(&self, m: MethodId) -> bool {
        use MethodId::*;
        match self {
            LyapunovKind::WeakX => matches!(m, Implicit | QuasiMonotone),
            LyapunovKind::WeakY => matches!(m, Implicit | QuasiMonotone | AgdFamilyI | AgdFamilyII | Fista),
            LyapunovKind::StrongX => matches!(m, ImplicitStrong | QuasiMonotoneStrong),
            LyapunovKind::StrongY => matches!(m, ImplicitStrong | QuasiMonotoneStrong | AgdStrong | ProxStrong),
            LyapunovKind::ValueOnly => matches!(m, FrankWolfe | HigherOrderDescent),
        }
    }
}

/// The Lyapunov function and error formula matching a trace's method.
pub fn default_certificate(trace: &Trace) -> (LyapunovKind, ErrorFormula) {
    let m = &trace.meta;
    let euclid = matches!(m.geometry.kind, GeneratorKind::Euclidean);
    match m.method {
        MethodId::Implicit => (LyapunovKind::WeakX, ErrorFormula::Zero),
        MethodId::ImplicitStrong => (LyapunovKind::StrongX, ErrorFormula::Zero),
        MethodId::QuasiMonotone => (LyapunovKind::WeakX, ErrorFormula::QuasiMonotone),
        MethodId::AgdFamilyI => (
            LyapunovKind::WeakY,
            match m.gmap {
                Some(GradientMapSpec::Nesterov { .. }) => ErrorFormula::NesterovFamilyI,
                Some(GradientMapSpec::UniversalNu { .. }) => ErrorFormula::UniversalNu,
                Some(GradientMapSpec::IdentityXk1) => ErrorFormula::QuasiMonotone,
                _ => ErrorFormula::GeneralFamilyI,
            },
        ),
        MethodId::AgdFamilyII => (
            LyapunovKind::WeakY,
            match m.gmap {
                Some(GradientMapSpec::Nesterov { .. }) => ErrorFormula::NesterovFamilyII,
                Some(GradientMapSpec::UniversalNu { .. }) => ErrorFormula::UniversalNu,
                _ => ErrorFormula::GeneralFamilyII,
            },
        ),
        MethodId::AgdStrong => (
            LyapunovKind::StrongY,
            match (m.gmap, euclid) {
                (Some(GradientMapSpec::Nesterov { .. }), true) => ErrorFormula::StrongNesterov,
                (_, true) => ErrorFormula::StrongEuclidean,
                _ => ErrorFormula::StrongGeneral,
            },
        ),
        MethodId::QuasiMonotoneStrong => (LyapunovKind::StrongX, ErrorFormula::StrongQuasiMonotone),
        MethodId::FrankWolfe => (
            LyapunovKind::ValueOnly,
            if m.smoothness.lipschitz_grad_l.is_none() && m.smoothness.holder.is_some() {
                ErrorFormula::FrankWolfeHolder
            } else {
                ErrorFormula::FrankWolfe
            },
        ),
        MethodId::Fista => (LyapunovKind::WeakY, ErrorFormula::Fista),
        MethodId::ProxStrong => (LyapunovKind::StrongY, ErrorFormula::ProxStrong),
        MethodId::HigherOrderDescent => (LyapunovKind::ValueOnly, ErrorFormula::HigherOrderDescent { conservative: true }),
    }
}

fn check_kind(trace: &Trace, kind: LyapunovKind) -> Result<()> {
    if !kind.compatible_with(trace.meta.method) {
        return Err(LabError::IncompatibleKind(format!(
            "{} does not apply to {} traces",
            kind.name(),
            trace.meta.method.name()
        )));
    }
    if matches!(kind, LyapunovKind::StrongX | LyapunovKind::StrongY) && trace.meta.mu.is_none() {
        return Err(LabError::IncompatibleKind(format!("{} needs mu", kind.name())));
    }
    Ok(())
}

/// `E_k` for every record.
pub fn evaluate_lyapunov(trace: &Trace, kind: LyapunovKind, reference: &ReferenceSolution) -> Result<Vec<f64>> {
    check_kind(trace, kind)?;
    let h = &trace.meta.geometry;
    let fs = reference.f_star;
    let mu = trace.meta.mu.unwrap_or(0.0);
    let mut out = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        let f = if kind.uses_y() { r.f_y } else { r.f_x };
        let e = match kind {
            LyapunovKind::ValueOnly => r.a_k * (f - fs),
            _ => {
                let d = h.divergence_from_dual(&reference.x_star, &r.state.z_dual)?;
                match kind {
                    LyapunovKind::WeakX | LyapunovKind::WeakY => d + r.a_k * (f - fs),
                    _ => r.a_k * (mu * d + f - fs),
                }
            }
        };
        // A diverging run yields non-finite values, which certify reports as failures.
        out.push(if e.is_finite() { e } else { f64::INFINITY });
    }
    Ok(out)
}

/// One certified step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertEntry {
    pub k: usize,
    #[serde(rename = "E_k")]
    pub e_k: f64,
    #[serde(rename = "E_k1")]
    pub e_next: f64,
    /// `(E_{k+1} − E_k)/δ`.
    pub lhs: f64,
    /// `ε_{k+1}`.
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of `log gap` against `log k` (polynomial) or against `k` (geometric).
    pub exponent: f64,
    pub r2: f64,
    /// First and last `k` of the fitted window.
    pub window: (usize, usize),
    pub points: usize,
    /// `loglog` or `semilog`.
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    pub method_id: String,
    pub problem_id: String,
    pub kind: LyapunovKind,
    pub formula: ErrorFormula,
    pub params: FormulaParams,
    pub per_k: Vec<CertEntry>,
    pub overall: bool,
    pub first_failure: Option<usize>,
    /// Number of inequalities checked (zero for a trace without steps).
    pub checks: usize,
    pub rate_fit: Option<RateFit>,
    /// Base slack `1e−9·(1+|E₀|)`; per-step slacks add a rounding allowance.
    pub slack_used: f64,
    /// `f − f*` along the sequence the Lyapunov function tracks.
    pub gaps: Vec<f64>,
}

impl CertReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn max_error(&self) -> f64 {
        self.per_k.iter().map(|e| e.rhs).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub const BASE_SLACK: f64 = 1e-9;

/// Certify `(E_{k+1} − E_k)/δ ≤ ε_{k+1}` at every step.
///
/// Strong-family traces are certified in the `A_k`-scaled form, which is the
/// same statement as `Ẽ_{k+1} − Ẽ_k ≤ −τ_k Ẽ_k + δε_{k+1}/A_{k+1}` for `Ẽ = E/A`.
pub fn certify(trace: &Trace, kind: LyapunovKind, formula: ErrorFormula, reference: &ReferenceSolution) -> Result<CertReport> {
    let e = evaluate_lyapunov(trace, kind, reference)?;
    let params = resolve_params(trace, formula)?;
    let eps = evaluate_error_terms(trace, formula, Some(reference))?;
    let delta = trace.meta.schedule.delta;
    let fs = reference.f_star;
    let base = BASE_SLACK * (1.0 + e[0].abs());
    let u = f64::EPSILON;
    let mut per_k = Vec::with_capacity(eps.len());
    let mut first = None;
    for k in 0..eps.len() {
        let (r0, r1) = (&trace.records[k], &trace.records[k + 1]);
        // Rounding allowance for the A-weighted value differences.
        let mag = r1.a_k * value_scale(r1, fs) + r0.a_k * value_scale(r0, fs);
        let resid = r1.residual * (1.0 + e[k].abs() + e[k + 1].abs());
        let slack = base + 64.0 * u * (mag + e[k].abs() + e[k + 1].abs()) + resid;
        let lhs = (e[k + 1] - e[k]) / delta;
        let rhs = eps[k];
        let pass = lhs.is_finite() && rhs.is_finite() && lhs <= rhs + slack / delta;
        if !pass && first.is_none() {
            first = Some(k);
        }
        per_k.push(CertEntry { k, e_k: e[k], e_next: e[k + 1], lhs, rhs, slack, pass });
    }
    let gaps: Vec<f64> = trace
        .records
        .iter()
        .map(|r| if kind.uses_y() { r.f_y - fs } else { r.f_x - fs })
        .collect();
    let geometric = matches!(trace.meta.schedule.kind, ScheduleKind::Geometric { .. } | ScheduleKind::Exponential { .. });
    let rate_fit = fit_rate(&gaps, geometric, 1e-13 * (1.0 + fs.abs()));
    Ok(CertReport {
        method_id: trace.method_id.clone(),
        problem_id: trace.problem_id.clone(),
        kind,
        formula,
        params,
        checks: per_k.len(),
        overall: first.is_none(),
        first_failure: first,
        per_k,
        rate_fit,
        slack_used: base,
        gaps,
    })
}

/// Magnitude of the summands behind `f(x)`: the values themselves plus `‖∇f(x)‖‖x‖`,
/// which bounds the terms of separable and quadratic objectives.
fn value_scale(r: &crate::methods::StepRecord, fs: f64) -> f64 {
    let g = r.grads.iter().map(|g| g.value.norm() * g.point.norm()).fold(0.0, f64::max);
    r.f_x.abs() + r.f_y.abs() + fs.abs() + g
}

/// Certify with [`default_certificate`].
pub fn certify_default(trace: &Trace, reference: &ReferenceSolution) -> Result<CertReport> {
    let (kind, formula) = default_certificate(trace);
    certify(trace, kind, formula, reference)
}

/// Least-squares rate over the last half of the positive part of `gaps`
/// (index = iteration). Points at or below `floor` are dropped.
pub fn fit_rate(gaps: &[f64], geometric: bool, floor: f64) -> Option<RateFit> {
    let n = gaps.len();
    if n < 4 {
        return None;
    }
    let start = (n / 2).max(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut first = None;
    let mut last = 0;
    for (k, &g) in gaps.iter().enumerate().skip(start) {
        if g > floor && g.is_finite() {
            xs.push(if geometric { k as f64 } else { (k as f64).ln() });
            ys.push(g.ln());
            first.get_or_insert(k);
            last = k;
        }
    }
    let (slope, _, r2) = crate::linalg::linear_fit(&xs, &ys)?;
    Some(RateFit {
        exponent: slope,
        r2,
        window: (first?, last),
        points: xs.len(),
        mode: if geometric { "semilog".into() } else { "loglog".into() },
    })
}

/// Fit over an explicit window `[k0, k1]` of a series, skipping nonpositive values.
pub fn fit_rate_window(series: &[f64], k0: usize, k1: usize, geometric: bool) -> Option<RateFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in k0.max(1)..=k1.min(series.len().saturating_sub(1)) {
        let g = series[k];
        if g > 0.0 && g.is_finite() {
            xs.push(if geometric { k as f64 } else { (k as f64).ln() });
            ys.push(g.ln());
        }
    }
    let (slope, _, r2) = crate::linalg::linear_fit(&xs, &ys)?;
    Some(RateFit {
        exponent: slope,
        r2,
        window: (k0, k1),
        points: xs.len(),
        mode: if geometric { "semilog".into() } else { "loglog".into() },
    })
}

#[cfg(test)]
mod tests;
