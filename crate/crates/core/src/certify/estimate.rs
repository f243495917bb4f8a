//! Estimate sequences built from certified traces, and the reverse reconstruction.

use super::{certify, evaluate_lyapunov, LyapunovKind};
use super::formulas::ErrorFormula;
use crate::dynamics::ContinuousTrace;
use crate::geometry::{DistanceGenerator, DualPoint};
use crate::methods::{MethodId, Trace};
use crate::problems::{ProblemInstance, ReferenceSolution};
use crate::{LabError, Result, Vector};
use serde::Serialize;

/// Shape of `φ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiForm {
    /// `φ_k(x) = f(x_k) + A_k⁻¹ D_h(x, z_k)`.
    LinearLbPlusBreg,
    /// `φ_k(x) = f(y_k) + A_k⁻¹ D_h(x, z_k)`.
    LinearLbPlusBregY,
    /// `φ_k(x) = f(x_k or y_k) + μ D_h(x, z_k)`; for Euclidean `h` this is `(μ/2)‖x − z_k‖²`.
    QuadraticLb { use_y: bool },
    /// `φ_k(x) = f(x_k)`.
    ValueOnly,
}

/// `(φ_k, A_k, ε̃_k)` stored through the data defining `φ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSequence {
    pub phi_form: PhiForm,
    pub a: Vec<f64>,
    /// `ε̃_k = δ Σ_{i≤k} max(ε_i, 0)`, with `ε̃_0 = 0`.
    pub eps_tilde: Vec<f64>,
    /// The value term of `φ_k` (`f(x_k)` or `f(y_k)`).
    pub f_vals: Vec<f64>,
    pub z: Vec<Vector>,
    pub z_dual: Vec<DualPoint>,
    pub mu: Option<f64>,
    pub geometry: DistanceGenerator,
    /// Closed-form `ε̃` bound where one is known (quasi-monotone and conditional gradient methods).
    pub table_eps_tilde: Option<Vec<f64>>,
}

impl EstimateSequence {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `φ_k(x)`.
    pub fn phi(&self, k: usize, x: &Vector) -> Result<f64> {
        let h = &self.geometry;
        Ok(match self.phi_form {
            PhiForm::LinearLbPlusBreg | PhiForm::LinearLbPlusBregY => {
                self.f_vals[k] + h.divergence_from_dual(x, &self.z_dual[k])? / self.a[k]
            }
            PhiForm::QuadraticLb { .. } => self.f_vals[k] + self.mu.unwrap_or(0.0) * h.divergence_from_dual(x, &self.z_dual[k])?,
            PhiForm::ValueOnly => self.f_vals[k],
        })
    }

    /// `min_x φ_k(x)`: the divergence term vanishes at `x = z_k`.
    pub fn phi_min(&self, k: usize) -> f64 {
        self.f_vals[k]
    }
}

fn form_for(kind: LyapunovKind) -> PhiForm {
    match kind {
        LyapunovKind::WeakX => PhiForm::LinearLbPlusBreg,
        LyapunovKind::WeakY => PhiForm::LinearLbPlusBregY,
        LyapunovKind::StrongX => PhiForm::QuadraticLb { use_y: false },
        LyapunovKind::StrongY => PhiForm::QuadraticLb { use_y: true },
        LyapunovKind::ValueOnly => PhiForm::ValueOnly,
    }
}

/// Build the estimate sequence matching `kind` from a certified trace.
pub fn to_estimate_sequence(
    trace: &Trace,
    kind: LyapunovKind,
    formula: ErrorFormula,
    reference: &ReferenceSolution,
) -> Result<EstimateSequence> {
    if let ErrorFormula::HigherOrderDescent { .. } = formula {
        return Err(LabError::IncompatibleKind(
            "the higher-order descent error depends on x*, so it does not extend to all x".into(),
        ));
    }
    let report = certify(trace, kind, formula, reference)?;
    let delta = trace.meta.schedule.delta;
    let mut eps_tilde = vec![0.0];
    let mut acc = 0.0;
    for e in &report.per_k {
        acc += delta * e.rhs.max(0.0);
        eps_tilde.push(acc);
    }
    let uses_y = matches!(kind, LyapunovKind::WeakY | LyapunovKind::StrongY);
    let recs = &trace.records;
    let table = match trace.meta.method {
        MethodId::QuasiMonotone => trace.meta.smoothness.subgradient_bound_g.map(|g| {
            let mut s = 0.0;
            let mut v = vec![0.0];
            for r in &recs[..recs.len() - 1] {
                s += 0.5 * r.alpha_k * r.alpha_k / 2.0 * g * g;
                v.push(s);
            }
            v
        }),
        MethodId::FrankWolfe => match (trace.meta.set, trace.meta.smoothness.lipschitz_grad_l) {
            (Some(set), Some(l)) => {
                let diam = set.diameter();
                let mut s = 0.0;
                let mut v = vec![0.0];
                for w in recs.windows(2) {
                    s += l / 2.0 * w[0].alpha_k * w[0].alpha_k / w[1].a_k * diam * diam;
                    v.push(s);
                }
                Some(v)
            }
            _ => None,
        },
        _ => None,
    };
    Ok(EstimateSequence {
        phi_form: form_for(kind),
        a: recs.iter().map(|r| r.a_k).collect(),
        eps_tilde,
        f_vals: recs.iter().map(|r| if uses_y { r.f_y } else { r.f_x }).collect(),
        z: recs.iter().map(|r| r.state.z.clone()).collect(),
        z_dual: recs.iter().map(|r| r.state.z_dual.clone()).collect(),
        mu: trace.meta.mu,
        geometry: trace.meta.geometry,
        table_eps_tilde: table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateVerification {
    pub checks: usize,
    /// Largest value of `φ_k(x) − A_k⁻¹ε̃_k − (1 − A_0/A_k) f(x) − (A_0/A_k) φ_0(x)`.
    pub max_violation: f64,
    /// Largest `f_k − φ_k*`.
    pub max_min_violation: f64,
    /// `1/A_k` at the last index.
    pub final_inverse_a: f64,
    pub inverse_a_decreasing: bool,
    /// `f_k − f* ≤ (A_0(φ_0(x*) − f*) + ε̃_k)/A_k` at the last index.
    pub rate_bound_holds: bool,
    pub pass: bool,
}

pub const ESTIMATE_TOL: f64 = 1e-9;

/// Check the error-extended defining inequality at every `(x, k)` pair.
pub fn verify_estimate_sequence(
    es: &EstimateSequence,
    problem: &ProblemInstance,
    sample_points: &[Vector],
    k_list: &[usize],
) -> Result<EstimateVerification> {
    let value = |x: &Vector| -> Result<f64> {
        match &problem.problem {
            crate::problems::Problem::Plain(o) => o.value(x),
            crate::problems::Problem::Composite(c) => c.value(x),
        }
    };
    let a0 = es.a[0];
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    for &k in k_list {
        if k >= es.len() {
            return Err(LabError::ConfigError(format!("k = {k} beyond estimate sequence of length {}", es.len())));
        }
        let ak = es.a[k];
        for x in sample_points {
            let fx = value(x)?;
            let lhs = es.phi(k, x)? - es.eps_tilde[k] / ak;
            let rhs = (1.0 - a0 / ak) * fx + a0 / ak * es.phi(0, x)?;
            worst = worst.max(lhs - rhs);
            checks += 1;
        }
    }
    let min_viol = (0..es.len()).map(|k| es.f_vals[k] - es.phi_min(k)).fold(f64::NEG_INFINITY, f64::max);
    let last = es.len() - 1;
    let decreasing = es.a.windows(2).all(|w| w[1] >= w[0]);
    let reference = problem.reference()?;
    let bound = (a0 * (es.phi(0, &reference.x_star)? - reference.f_star) + es.eps_tilde[last]) / es.a[last];
    let rate_ok = es.f_vals[last] - reference.f_star <= bound + ESTIMATE_TOL;
    let pass = worst <= ESTIMATE_TOL && min_viol <= ESTIMATE_TOL && rate_ok;
    Ok(EstimateVerification {
        checks,
        max_violation: worst.max(0.0),
        max_min_violation: min_viol,
        final_inverse_a: 1.0 / es.a[last],
        inverse_a_decreasing: decreasing,
        rate_bound_holds: rate_ok,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrip {
    /// `E_k = A_k(φ_k(x*) − f*)`.
    pub reconstructed: Vec<f64>,
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
    pub pass: bool,
}

/// Rebuild `E_k` from `φ_k` and compare with [`evaluate_lyapunov`] (identity to 1e−12).
pub fn from_estimate_sequence(es: &EstimateSequence, trace: &Trace, kind: LyapunovKind, reference: &ReferenceSolution) -> Result<RoundTrip> {
    if form_for(kind) != es.phi_form {
        return Err(LabError::IncompatibleKind(format!("{:?} does not match Lyapunov kind {}", es.phi_form, kind.name())));
    }
    if es.len() != trace.records.len() {
        return Err(LabError::IncompatibleKind("estimate sequence and trace lengths differ".into()));
    }
    let e = evaluate_lyapunov(trace, kind, reference)?;
    let mut rec = Vec::with_capacity(es.len());
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for k in 0..es.len() {
        let v = es.a[k] * (es.phi(k, &reference.x_star)? - reference.f_star);
        let d = (v - e[k]).abs();
        max_abs = max_abs.max(d);
        max_rel = max_rel.max(d / (1.0 + e[k].abs().max(es.a[k] * reference.f_star.abs())));
        rec.push(v);
    }
    Ok(RoundTrip { reconstructed: rec, max_abs_deviation: max_abs, max_rel_deviation: max_rel, pass: max_rel <= 1e-12 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousEstimateReport {
    pub t: Vec<f64>,
    /// `φ_t(x*) = f(X_t) + e^{−β_t} D_h(x*, Z_t)`.
    pub phi: Vec<f64>,
    /// `(1 − e^{β_0−β_t}) f* + e^{β_0−β_t} φ_0(x*)`.
    pub bound: Vec<f64>,
    pub max_violation: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Continuous-time estimate sequence along a first-order trajectory.
pub fn continuous_estimate_sequence(ct: &ContinuousTrace, reference: &ReferenceSolution) -> Result<ContinuousEstimateReport> {
    let s0 = ct.samples.first().ok_or_else(|| LabError::EmptySeries("continuous trace has no samples".into()))?;
    let h = &ct.geometry;
    let fs = reference.f_star;
    let mut t = Vec::new();
    let mut phi = Vec::new();
    let mut bound = Vec::new();
    let phi_of = |s: &crate::dynamics::ContinuousSample| -> Result<f64> {
        Ok(s.f + (-s.beta).exp() * h.divergence_from_dual(&reference.x_star, &DualPoint::new(s.z_dual.clone()))?)
    };
    let phi0 = phi_of(s0)?;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut scale: f64 = phi0.abs().max(fs.abs());
    for s in &ct.samples {
        let p = phi_of(s)?;
        let w = (s0.beta - s.beta).exp();
        let b = (1.0 - w) * fs + w * phi0;
        worst = worst.max(p - b);
        scale = scale.max(p.abs());
        t.push(s.state.t);
        phi.push(p);
        bound.push(b);
    }
    let slack = 10.0 * ct.tol * (1.0 + scale);
    Ok(ContinuousEstimateReport { t, phi, bound, max_violation: worst, slack, pass: worst <= slack })
}
