//! Per-step error terms `ε_{k+1}` computed from recorded trace quantities.

use crate::geometry::GeneratorKind;
use crate::methods::{GradientMapSpec, MethodId, StepRecord, Trace};
use crate::problems::ReferenceSolution;
use crate::{LabError, Result, Vector};
use serde::{Deserialize, Serialize};

/// Error bounds, one per analysed (method, map) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ErrorFormula {
    /// Implicit methods: `ε ≡ 0`.
    Zero,
    /// Family I, any map:
    /// `((p−1)/p)σ^{−1/(p−1)} α^{p/(p−1)}/δ ‖∇f(x_{k+1})‖^{p/(p−1)} + (A_{k+1}/δ)(f(y_{k+1}) − f(x_{k+1}))`.
    GeneralFamilyI,
    /// Family II, any map: first term with `∇f(y_{k+1})`, plus `(A_{k+1}/δ)⟨∇f(y_{k+1}), y_{k+1} − x_{k+1}⟩`.
    GeneralFamilyII,
    /// Quasi-monotone method: `α²/(2σδ)‖∇f(x_{k+1})‖²`.
    QuasiMonotone,
    /// Family I with the gradient step: `(α²/(2σδ) − εA_{k+1}/(2δ))‖∇f(x_{k+1})‖²`.
    NesterovFamilyI,
    /// Family II with the gradient step, in `∇f(y_{k+1})`.
    NesterovFamilyII,
    /// Hölder map: the gradient-step form with `ε̃` plus `(A_{k+1}/δ)δ̃`.
    UniversalNu,
    /// Strong family, general `h`.
    StrongGeneral,
    /// Strong family, Euclidean `h`:
    /// `(A_{k+1}/δ)(f(y_{k+1}) − f(x_k) + τ²/(2μ)‖∇f(x_k)‖² + (τ/(2ε) − μ/(2τ))‖x_k − y_k‖²)`.
    StrongEuclidean,
    /// Strong family with the gradient step, Euclidean `h`:
    /// `(A_{k+1}/δ)(τ²/(2μ) − ε/2)‖∇f(x_k)‖² + (A_{k+1}/δ)(τ/(2ε) − μ/(2τ))‖x_k − y_k‖²`.
    StrongNesterov,
    /// Strongly convex quasi-monotone: `A_kτ²/(2μσδ)‖∇f(x_{k+1})‖²`.
    StrongQuasiMonotone,
    /// Frank-Wolfe: `A_{k+1}τ²/(2εδ)‖z_k − x_k‖²`.
    FrankWolfe,
    /// Frank-Wolfe, Hölder gradient: `A_{k+1}τ^{1+ν}/((1+ν)εδ)‖z_k − x_k‖^{1+ν}`.
    FrankWolfeHolder,
    /// Accelerated proximal: `(−σ/2 + A_{k+1}τ²/(2ε))‖z_{k+1} − z_k‖²/δ`.
    Fista,
    /// Strongly convex proximal (Euclidean).
    ProxStrong,
    /// Higher-order descent:
    /// `α^{p̃} A_k^{1−p̃} c^{1−p̃} (p̃−1)^{p̃−1} p̃^{−p̃} ‖x_{k+1} − x*‖^{p̃}/(εδ)` with the
    /// map's progress constant `c` (conservative or main form).
    HigherOrderDescent { conservative: bool },
}

impl ErrorFormula {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorFormula::Zero => "zero",
            ErrorFormula::GeneralFamilyI => "general_family_i",
            ErrorFormula::GeneralFamilyII => "general_family_ii",
            ErrorFormula::QuasiMonotone => "quasi_monotone",
            ErrorFormula::NesterovFamilyI => "nesterov_family_i",
            ErrorFormula::NesterovFamilyII => "nesterov_family_ii",
            ErrorFormula::UniversalNu => "universal_nu",
            ErrorFormula::StrongGeneral => "strong_general",
            ErrorFormula::StrongEuclidean => "strong_euclidean",
            ErrorFormula::StrongNesterov => "strong_nesterov",
            ErrorFormula::StrongQuasiMonotone => "strong_quasi_monotone",
            ErrorFormula::FrankWolfe => "frank_wolfe",
            ErrorFormula::FrankWolfeHolder => "frank_wolfe_holder",
            ErrorFormula::Fista => "fista",
            ErrorFormula::ProxStrong => "prox_strong",
            ErrorFormula::HigherOrderDescent { conservative: true } => "higher_order_descent",
            ErrorFormula::HigherOrderDescent { conservative: false } => "higher_order_descent_main",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let all = [
            ErrorFormula::Zero,
            ErrorFormula::GeneralFamilyI,
            ErrorFormula::GeneralFamilyII,
            ErrorFormula::QuasiMonotone,
            ErrorFormula::NesterovFamilyI,
            ErrorFormula::NesterovFamilyII,
            ErrorFormula::UniversalNu,
            ErrorFormula::StrongGeneral,
            ErrorFormula::StrongEuclidean,
            ErrorFormula::StrongNesterov,
            ErrorFormula::StrongQuasiMonotone,
            ErrorFormula::FrankWolfe,
            ErrorFormula::FrankWolfeHolder,
            ErrorFormula::Fista,
            ErrorFormula::ProxStrong,
            ErrorFormula::HigherOrderDescent { conservative: true },
            ErrorFormula::HigherOrderDescent { conservative: false },
        ];
        all.into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| LabError::ConfigError(format!("unknown error formula '{s}'")))
    }

    fn methods(&self) -> &'static [MethodId] {
        use MethodId::*;
        match self {
            ErrorFormula::Zero => &[Implicit, ImplicitStrong],
            ErrorFormula::GeneralFamilyI | ErrorFormula::NesterovFamilyI => &[AgdFamilyI, QuasiMonotone],
            ErrorFormula::QuasiMonotone => &[QuasiMonotone, AgdFamilyI],
            ErrorFormula::GeneralFamilyII | ErrorFormula::NesterovFamilyII => &[AgdFamilyII],
            ErrorFormula::UniversalNu => &[AgdFamilyI, AgdFamilyII],
            ErrorFormula::StrongGeneral | ErrorFormula::StrongEuclidean | ErrorFormula::StrongNesterov => &[AgdStrong],
            ErrorFormula::StrongQuasiMonotone => &[QuasiMonotoneStrong],
            ErrorFormula::FrankWolfe | ErrorFormula::FrankWolfeHolder => &[FrankWolfe],
            ErrorFormula::Fista => &[Fista],
            ErrorFormula::ProxStrong => &[ProxStrong],
            ErrorFormula::HigherOrderDescent { .. } => &[HigherOrderDescent],
        }
    }
}

/// Constants entering a formula, all taken from trace metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormulaParams {
    pub sigma: f64,
    pub p: f64,
    pub delta: f64,
    /// `ε = 1/L` (or the map's `ε` where the formula uses it).
    pub eps: Option<f64>,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub n: Option<f64>,
    pub p_tilde: Option<f64>,
    pub eps_tilde: Option<f64>,
    pub delta_tilde: Option<f64>,
    /// Progress constant `c` of the universal map.
    pub c: Option<f64>,
}

fn missing(what: &str) -> LabError {
    LabError::MissingTraceField(what.to_string())
}

/// Resolve the constants of `formula` from the trace and check applicability.
pub fn resolve_params(trace: &Trace, formula: ErrorFormula) -> Result<FormulaParams> {
    let m = &trace.meta;
    if !formula.methods().contains(&m.method) {
        return Err(LabError::IncompatibleKind(format!(
            "error formula {} does not apply to {} traces",
            formula.name(),
            m.method.name()
        )));
    }
    let mut p = FormulaParams {
        sigma: m.geometry.sigma,
        p: m.geometry.p,
        delta: m.schedule.delta,
        eps: m.smoothness.lipschitz_grad_l.map(|l| 1.0 / l),
        mu: m.mu,
        nu: None,
        n: None,
        p_tilde: None,
        eps_tilde: None,
        delta_tilde: None,
        c: None,
    };
    match formula {
        ErrorFormula::NesterovFamilyI | ErrorFormula::NesterovFamilyII | ErrorFormula::StrongNesterov => match m.gmap {
            Some(GradientMapSpec::Nesterov { eps }) => p.eps = Some(eps),
            _ => return Err(LabError::IncompatibleKind(format!("{} needs the nesterov map", formula.name()))),
        },
        ErrorFormula::UniversalNu => match m.gmap {
            Some(GradientMapSpec::UniversalNu { eps_tilde, delta_tilde }) => {
                p.eps_tilde = Some(eps_tilde);
                p.delta_tilde = Some(delta_tilde);
            }
            _ => return Err(LabError::IncompatibleKind("universal_nu formula needs the universal_nu map".into())),
        },
        ErrorFormula::FrankWolfeHolder => {
            let hm = m.smoothness.holder.ok_or_else(|| missing("holder metadata"))?;
            p.eps = Some(hm.epsilon);
            p.nu = Some(hm.nu);
        }
        ErrorFormula::HigherOrderDescent { conservative } => match m.gmap {
            Some(g @ GradientMapSpec::UniversalHigher { eps, nu, n, .. }) => {
                p.eps = Some(eps);
                p.nu = Some(nu);
                p.n = Some(n);
                p.p_tilde = g.p_tilde();
                p.c = if conservative { g.progress_coefficient_conservative() } else { g.progress_coefficient() };
            }
            _ => return Err(LabError::IncompatibleKind("higher-order descent formula needs universal_higher".into())),
        },
        _ => {}
    }
    let needs_eps = matches!(
        formula,
        ErrorFormula::StrongGeneral
            | ErrorFormula::StrongEuclidean
            | ErrorFormula::FrankWolfe
            | ErrorFormula::Fista
            | ErrorFormula::ProxStrong
    );
    if needs_eps && p.eps.is_none() {
        return Err(missing("lipschitz_grad_L"));
    }
    let needs_mu = matches!(
        formula,
        ErrorFormula::StrongGeneral
            | ErrorFormula::StrongEuclidean
            | ErrorFormula::StrongNesterov
            | ErrorFormula::StrongQuasiMonotone
            | ErrorFormula::ProxStrong
    );
    if needs_mu && p.mu.is_none() {
        return Err(missing("mu"));
    }
    Ok(p)
}

fn grad(r: &StepRecord, label: &str) -> Result<Vector> {
    r.used_grad(label).ok_or_else(|| missing(&format!("gradient '{label}' at k = {}", r.state.k)))
}

/// `((p−1)/p) σ^{−1/(p−1)} α^{q} ‖g‖^{q}`, `q = p/(p−1)`.
fn dual_term(p: f64, sigma: f64, alpha: f64, gnorm: f64) -> f64 {
    let q = p / (p - 1.0);
    ((p - 1.0) / p) * sigma.powf(-1.0 / (p - 1.0)) * alpha.powf(q) * gnorm.powf(q)
}

/// `ε_{k+1}` for `k = 0..n_steps`.
pub fn evaluate_error_terms(trace: &Trace, formula: ErrorFormula, reference: Option<&ReferenceSolution>) -> Result<Vec<f64>> {
    let pr = resolve_params(trace, formula)?;
    let h = &trace.meta.geometry;
    let d = pr.delta;
    let n = trace.n_steps();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (r, nx) = (&trace.records[k], &trace.records[k + 1]);
        let (a_k, a_k1, alpha, tau) = (r.a_k, nx.a_k, r.alpha_k, r.tau_k);
        let e = match formula {
            ErrorFormula::Zero => 0.0,
            ErrorFormula::GeneralFamilyI => {
                let g = grad(nx, "x")?;
                dual_term(pr.p, pr.sigma, alpha, g.norm()) / d + a_k1 / d * (nx.f_y - nx.f_x)
            }
            ErrorFormula::GeneralFamilyII => {
                let g = grad(nx, "y")?;
                dual_term(pr.p, pr.sigma, alpha, g.norm()) / d + a_k1 / d * g.dot(&(&nx.state.y - &nx.state.x))
            }
            ErrorFormula::QuasiMonotone => {
                let g = grad(nx, "x")?;
                dual_term(pr.p, pr.sigma, alpha, g.norm()) / d
            }
            ErrorFormula::NesterovFamilyI | ErrorFormula::NesterovFamilyII | ErrorFormula::UniversalNu => {
                let label = if trace.meta.method == MethodId::AgdFamilyII { "y" } else { "x" };
                let g2 = grad(nx, label)?.norm_squared();
                let (step, extra) = match formula {
                    ErrorFormula::UniversalNu => (pr.eps_tilde.unwrap_or(0.0), a_k1 / d * pr.delta_tilde.unwrap_or(0.0)),
                    _ => (pr.eps.unwrap_or(0.0), 0.0),
                };
                (alpha * alpha / (2.0 * pr.sigma * d) - step * a_k1 / (2.0 * d)) * g2 + extra
            }
            ErrorFormula::StrongGeneral => {
                let (eps, mu, s) = (pr.eps.unwrap_or(0.0), pr.mu.unwrap_or(0.0), pr.sigma);
                let g = grad(nx, "x")?;
                let xk = &nx.state.x;
                let dxy = (xk - &r.state.y).norm_squared();
                let mut w = (h.grad(xk)?.coords - &r.state.z_dual.coords - &g / mu) * tau;
                if let GeneratorKind::NegativeEntropy = h.kind {
                    let m = w.mean();
                    w.add_scalar_mut(-m);
                }
                a_k1 / d
                    * (nx.f_y - nx.f_x + (tau / (2.0 * eps) - s * mu / (2.0 * tau)) * dxy - mu * s / 2.0 * dxy
                        + tau * g.dot(&(&r.state.y - xk))
                        + mu / (2.0 * s) * w.norm_squared())
            }
            ErrorFormula::StrongEuclidean => {
                let (eps, mu) = (pr.eps.unwrap_or(0.0), pr.mu.unwrap_or(0.0));
                let g = grad(nx, "x")?;
                let dxy = (&nx.state.x - &r.state.y).norm_squared();
                a_k1 / d * (nx.f_y - nx.f_x + tau * tau / (2.0 * mu) * g.norm_squared() + (tau / (2.0 * eps) - mu / (2.0 * tau)) * dxy)
            }
            ErrorFormula::StrongNesterov => {
                let (eps, mu) = (pr.eps.unwrap_or(0.0), pr.mu.unwrap_or(0.0));
                let g = grad(nx, "x")?;
                let dxy = (&nx.state.x - &r.state.y).norm_squared();
                a_k1 / d * ((tau * tau / (2.0 * mu) - eps / 2.0) * g.norm_squared() + (tau / (2.0 * eps) - mu / (2.0 * tau)) * dxy)
            }
            ErrorFormula::StrongQuasiMonotone => {
                let mu = pr.mu.unwrap_or(0.0);
                let g = grad(nx, "x")?;
                a_k * tau * tau / (2.0 * mu * pr.sigma * d) * g.norm_squared()
            }
            ErrorFormula::FrankWolfe => {
                let eps = pr.eps.unwrap_or(0.0);
                let dz = (&nx.state.z - &r.state.x).norm_squared();
                a_k1 * tau * tau / (2.0 * eps * d) * dz
            }
            ErrorFormula::FrankWolfeHolder => {
                let (eps, nu) = (pr.eps.unwrap_or(0.0), pr.nu.unwrap_or(1.0));
                let dz = (&nx.state.z - &r.state.x).norm();
                a_k1 * tau.powf(1.0 + nu) / ((1.0 + nu) * eps * d) * dz.powf(1.0 + nu)
            }
            ErrorFormula::Fista => {
                let eps = pr.eps.unwrap_or(0.0);
                let dz = (&nx.state.z - &r.state.z).norm_squared();
                (-pr.sigma / 2.0 + a_k1 * tau * tau / (2.0 * eps)) * dz / d
            }
            ErrorFormula::ProxStrong => {
                let (eps, mu) = (pr.eps.unwrap_or(0.0), pr.mu.unwrap_or(0.0));
                let xk = &nx.state.x;
                let zk = &r.state.z;
                let v = (xk - zk) * tau - (zk - &nx.state.z);
                let t1 = -mu / 2.0 * v.norm_squared();
                let t2 = (xk - &nx.state.y).norm_squared() / (2.0 * eps);
                let t3 = (tau / (2.0 * eps) - mu / (2.0 * tau)) * (xk - &r.state.y).norm_squared();
                a_k1 * (t1 + t2 + t3) / d
            }
            ErrorFormula::HigherOrderDescent { .. } => {
                let rf = reference.ok_or_else(|| missing("reference solution"))?;
                let (eps, pt, c) = (pr.eps.unwrap_or(0.0), pr.p_tilde.unwrap_or(2.0), pr.c.unwrap_or(0.0));
                let rn = (&nx.state.x - &rf.x_star).norm();
                alpha.powf(pt) * a_k.powf(1.0 - pt) * c.powf(1.0 - pt) * (pt - 1.0).powf(pt - 1.0) / pt.powf(pt) * rn.powf(pt)
                    / (eps * d)
            }
        };
        out.push(e);
    }
    Ok(out)
}
