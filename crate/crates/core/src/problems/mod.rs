//! Objective oracles, composite objectives, feasible sets and the test corpus.

mod composite;
mod corpus;
mod objective;
mod sets;

pub use composite::{CompositeObjective, SimplePart};
pub use corpus::{corpus, corpus_names, CorpusParams, Problem, ProblemInstance};
pub use objective::{HolderMeta, Objective, ObjectiveKind, Provenance, ReferenceSolution, SmoothnessMeta};
pub use sets::{project_simplex, FeasibleSet};

use crate::{LabError, Result, Vector};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDiffReport {
    pub max_deviation: f64,
    pub pass: bool,
}

/// Compare the gradient oracle with central differences of the value oracle.
///
/// The deviation is `max_i |g_i − fd_i| / max(1, ‖g‖_∞)`; the check passes at `≤ 1e−6`.
pub fn finite_diff_check(f: &Objective, x: &Vector, h_step: f64) -> Result<FiniteDiffReport> {
    if !(1e-8..=1e-3).contains(&h_step) {
        return Err(LabError::ConfigError(format!("h_step {h_step} outside [1e-8, 1e-3]")));
    }
    if f.is_nonsmooth_at(x) {
        return Err(LabError::NonsmoothPoint(format!("{} is not differentiable at the given point", f.id)));
    }
    let g = f.grad(x)?;
    let mut dev: f64 = 0.0;
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h_step;
        xm[i] -= h_step;
        let fd = (f.value(&xp)? - f.value(&xm)?) / (2.0 * h_step);
        dev = dev.max((fd - g[i]).abs());
    }
    let scale = crate::linalg::max_abs(&g).max(1.0);
    let max_deviation = dev / scale;
    Ok(FiniteDiffReport { max_deviation, pass: max_deviation <= 1e-6 })
}

/// Composite variant: rejects kinks of ψ, otherwise checks the smooth part.
pub fn finite_diff_check_composite(c: &CompositeObjective, x: &Vector, h_step: f64) -> Result<FiniteDiffReport> {
    if !c.simple.is_smooth() {
        let kink = match c.simple {
            SimplePart::L1 { .. } => x.iter().any(|v| v.abs() < 1e-12),
            SimplePart::IndicatorBox { lo, hi } => x.iter().any(|&v| (v - lo).abs() < 1e-12 || (v - hi).abs() < 1e-12),
            _ => false,
        };
        if kink {
            return Err(LabError::NonsmoothPoint(format!("{} sits on a kink of its simple part", c.id())));
        }
    }
    finite_diff_check(&c.smooth, x, h_step)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub pairs: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Sample pairs and check `μ‖x−y‖² ≤ ⟨∇f(x)−∇f(y), x−y⟩ ≤ L‖x−y‖²` against the metadata.
pub fn curvature_check(f: &Objective, points: &mut dyn FnMut() -> Vector, pairs: usize) -> Result<CurvatureReport> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for _ in 0..pairs {
        let x = points();
        let y = points();
        let d = &x - &y;
        let n2 = d.norm_squared();
        if n2 < 1e-20 {
            continue;
        }
        let r = (f.grad(&x)? - f.grad(&y)?).dot(&d) / n2;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let tol = 1e-9;
    let pass_l = f.meta.lipschitz_grad_l.is_none_or(|l| hi <= l * (1.0 + tol) + tol);
    let pass_mu = f.meta.strong_convexity_mu.is_none_or(|m| lo >= m * (1.0 - tol) - tol);
    Ok(CurvatureReport { pairs, min_ratio: lo, max_ratio: hi, pass: pass_l && pass_mu })
}

/// Standard sampler for curvature checks: Gaussian points around the reference.
pub fn gaussian_points<'a>(rng: &'a mut ChaCha8Rng, center: Vector, scale: f64) -> impl FnMut() -> Vector + 'a {
    move || &center + crate::linalg::gaussian_vector(rng, center.len()) * scale
}

#[cfg(test)]
mod tests;
