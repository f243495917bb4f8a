//! One-step transitions of every discrete method.
//!
//! Each stepper maps `IterateState` at index `k` to index `k+1` and reports the
//! gradients it used. The `x` of the new state is the coupling point of the step
//! (`x_{k+1}` for the weak families, `x_k` for the constant-τ strong family).

use super::gradient_map::{apply_gradient_map, GradientMapSpec};
use super::implicit::{solve_implicit_strong, solve_implicit_weak};
use super::schedule::DiscreteSchedule;
use super::stochastic::GradientOracle;
use super::IterateState;
use crate::geometry::{DistanceGenerator, DualPoint, GeneratorKind, GeometryDomain};
use crate::problems::{CompositeObjective, FeasibleSet, Objective, SimplePart};
use crate::{LabError, Result, Vector};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// A gradient used by a step, with its evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradEval {
    pub label: String,
    pub point: Vector,
    /// Exact oracle value (noise, if any, is stored separately).
    pub value: Vector,
}

impl GradEval {
    pub fn new(label: &str, point: &Vector, value: &Vector) -> Self {
        GradEval { label: label.to_string(), point: point.clone(), value: value.clone() }
    }
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: IterateState,
    pub grads: Vec<GradEval>,
    pub noise: Option<Vector>,
    /// Relative residual of inner solves (zero for explicit steps).
    pub residual: f64,
    pub aux: BTreeMap<String, f64>,
}

impl StepOutput {
    fn new(state: IterateState, grads: Vec<GradEval>) -> Self {
        StepOutput { state, grads, noise: None, residual: 0.0, aux: BTreeMap::new() }
    }
}

fn next(st: &IterateState, x: Vector, y: Vector, z: Vector, z_dual: DualPoint) -> IterateState {
    IterateState { k: st.k + 1, x, y, z, z_dual }
}

/// Point map `G` for the families that keep `y` separate.
fn map_y(
    gmap: &GradientMapSpec,
    f: &Objective,
    x: &Vector,
    g: &Vector,
    tau: f64,
    z_new: &Vector,
    y_old: &Vector,
) -> Result<(Vector, f64)> {
    match gmap {
        GradientMapSpec::IdentityXk1 => Ok((x.clone(), 0.0)),
        GradientMapSpec::TsengCoupled => Ok((z_new * tau + y_old * (1.0 - tau), 0.0)),
        _ => {
            let out = apply_gradient_map(gmap, f, x, g)?;
            Ok((out.y, out.residual))
        }
    }
}

/// Progress diagnostics of the point maps, stored as aux entries.
fn map_diagnostics(
    gmap: &GradientMapSpec,
    f: &Objective,
    x: &Vector,
    gx: &Vector,
    y: &Vector,
    gy: Option<&Vector>,
    aux: &mut BTreeMap<String, f64>,
) -> Result<()> {
    match *gmap {
        GradientMapSpec::Nesterov { eps } => {
            // f(G(x)) − f(x) + (ε/2)‖∇f(x)‖², nonpositive on 1/ε-smooth f.
            aux.insert("map_progress".into(), f.value(y)? - f.value(x)? + 0.5 * eps * gx.norm_squared());
        }
        GradientMapSpec::UniversalHigher { eps, .. } => {
            let gy = match gy {
                Some(g) => g.clone(),
                None => f.grad(y)?,
            };
            let pt = gmap.p_tilde().unwrap_or(2.0);
            let lhs = gy.dot(&(y - x));
            let scale = eps.powf(1.0 / (pt - 1.0)) * gy.norm().powf(pt / (pt - 1.0));
            aux.insert("progress_lhs".into(), lhs);
            aux.insert("progress_rhs".into(), -gmap.progress_coefficient().unwrap_or(0.0) * scale);
            aux.insert("progress_rhs_conservative".into(), -gmap.progress_coefficient_conservative().unwrap_or(0.0) * scale);
        }
        _ => {}
    }
    Ok(())
}

/// Implicit method: `x_{k+1} = (τ z_{k+1} + x_k)/(1+τ)`, `∇h(z_{k+1}) = ∇h(z_k) − α∇f(x_{k+1})`.
pub fn implicit_step(f: &Objective, h: &DistanceGenerator, s: &DiscreteSchedule, st: &IterateState) -> Result<StepOutput> {
    let (alpha, tau) = (s.alpha(st.k), s.tau(st.k));
    let sol = solve_implicit_weak(f, h, &st.x, &st.z_dual, alpha, tau)?;
    let g = f.grad(&sol.x)?;
    let grads = vec![GradEval::new("x", &sol.x, &g)];
    let mut out = StepOutput::new(next(st, sol.x.clone(), sol.x.clone(), sol.z, sol.z_dual), grads);
    out.residual = sol.residual;
    out.aux.insert("inner_iterations".into(), sol.iterations as f64);
    Ok(out)
}

/// Second-family implicit method for `μ`-uniformly convex `f`.
pub fn implicit_strong_step(
    f: &Objective,
    h: &DistanceGenerator,
    mu: f64,
    s: &DiscreteSchedule,
    st: &IterateState,
) -> Result<StepOutput> {
    let tau = s.tau(st.k);
    let sol = solve_implicit_strong(f, h, mu, &st.x, &st.z_dual, tau)?;
    let g = f.grad(&sol.x)?;
    let grads = vec![GradEval::new("x", &sol.x, &g)];
    let mut out = StepOutput::new(next(st, sol.x.clone(), sol.x.clone(), sol.z, sol.z_dual), grads);
    out.residual = sol.residual;
    out.aux.insert("inner_iterations".into(), sol.iterations as f64);
    Ok(out)
}

/// Family I: `x = τz_k + (1−τ)y_k`, mirror step with `∇f(x)`, then `y = G(x)`.
pub fn agd_family_i_step(
    f: &Objective,
    h: &DistanceGenerator,
    s: &DiscreteSchedule,
    st: &IterateState,
    gmap: &GradientMapSpec,
    oracle: &mut GradientOracle,
) -> Result<StepOutput> {
    let (alpha, tau) = (s.alpha(st.k), s.tau(st.k));
    let x = &st.z * tau + &st.y * (1.0 - tau);
    let sample = oracle.eval(f, &x)?;
    let g = sample.used();
    let (z, z_dual) = h.mirror_step(&st.z_dual, &(-&g * alpha))?;
    let (y, residual) = map_y(gmap, f, &x, &g, tau, &z, &st.y)?;
    let grads = vec![GradEval::new("x", &x, &sample.exact)];
    let mut out = StepOutput::new(next(st, x.clone(), y.clone(), z, z_dual), grads);
    map_diagnostics(gmap, f, &x, &sample.exact, &y, None, &mut out.aux)?;
    out.noise = sample.noise;
    out.residual = residual;
    Ok(out)
}

/// Family II: `x = τz_k + (1−τ)y_k`, `y = G(x)`, then mirror step with `∇f(y)`.
pub fn agd_family_ii_step(
    f: &Objective,
    h: &DistanceGenerator,
    s: &DiscreteSchedule,
    st: &IterateState,
    gmap: &GradientMapSpec,
) -> Result<StepOutput> {
    if let GradientMapSpec::TsengCoupled = gmap {
        return Err(LabError::IncompatibleConfiguration("family II evaluates G before z_{k+1}; tseng_coupled needs z_{k+1}".into()));
    }
    let (alpha, tau) = (s.alpha(st.k), s.tau(st.k));
    let x = &st.z * tau + &st.y * (1.0 - tau);
    let gx = f.grad(&x)?;
    let (y, residual) = map_y(gmap, f, &x, &gx, tau, &st.z, &st.y)?;
    let gy = f.grad(&y)?;
    let (z, z_dual) = h.mirror_step(&st.z_dual, &(-&gy * alpha))?;
    let grads = vec![GradEval::new("x", &x, &gx), GradEval::new("y", &y, &gy)];
    let mut out = StepOutput::new(next(st, x.clone(), y.clone(), z, z_dual), grads);
    map_diagnostics(gmap, f, &x, &gx, &y, Some(&gy), &mut out.aux)?;
    out.residual = residual;
    Ok(out)
}

/// Strongly convex family with constant `τ`:
/// `x_k = (τz_k + y_k)/(1+τ)`, `∇h(z_{k+1}) = ∇h(z_k) + τ(∇h(x_k) − ∇h(z_k) − ∇f(x_k)/μ)`, `y_{k+1} = G(x_k)`.
pub fn agd_strong_step(
    f: &Objective,
    h: &DistanceGenerator,
    mu: f64,
    s: &DiscreteSchedule,
    st: &IterateState,
    gmap: &GradientMapSpec,
    oracle: &mut GradientOracle,
) -> Result<StepOutput> {
    let tau = s.tau(st.k);
    let x = (&st.z * tau + &st.y) / (1.0 + tau);
    let sample = oracle.eval(f, &x)?;
    let g = sample.used();
    let hx = h.grad(&x)?.coords;
    let theta = &st.z_dual.coords + (hx - &st.z_dual.coords - &g / mu) * tau;
    let (z, z_dual) = h.from_dual(theta)?;
    let (y, residual) = map_y(gmap, f, &x, &g, tau, &z, &st.y)?;
    let grads = vec![GradEval::new("x", &x, &sample.exact)];
    let mut out = StepOutput::new(next(st, x.clone(), y.clone(), z, z_dual), grads);
    map_diagnostics(gmap, f, &x, &sample.exact, &y, None, &mut out.aux)?;
    out.noise = sample.noise;
    out.residual = residual;
    Ok(out)
}

/// Strongly convex quasi-monotone method with `τ = α/A_k`:
/// `x_{k+1} = (τz_k + x_k)/(1+τ)` and
/// `(1+τ)∇h(z_{k+1}) = ∇h(z_k) + τ∇h(x_{k+1}) − (τ/μ)∇f(x_{k+1})`.
///
/// The second relation is explicit in dual coordinates, so no inner iteration
/// is needed for any of the supported `h`.
pub fn quasi_monotone_strong_step(
    f: &Objective,
    h: &DistanceGenerator,
    mu: f64,
    s: &DiscreteSchedule,
    st: &IterateState,
    oracle: &mut GradientOracle,
) -> Result<StepOutput> {
    let tau = s.tau(st.k);
    let x = (&st.z * tau + &st.x) / (1.0 + tau);
    let sample = oracle.eval(f, &x)?;
    let g = sample.used();
    let hx = h.grad(&x)?.coords;
    let theta = (&st.z_dual.coords + hx * tau - &g * (tau / mu)) / (1.0 + tau);
    let (z, z_dual) = h.from_dual(theta.clone())?;
    let residual = match h.domain {
        GeometryDomain::Box { .. } => 0.0,
        _ => {
            let mut r = h.grad(&z)?.coords - &theta;
            if let GeneratorKind::NegativeEntropy = h.kind {
                let m = r.mean();
                r.add_scalar_mut(-m);
            }
            r.norm() / (1.0 + theta.norm())
        }
    };
    let grads = vec![GradEval::new("x", &x, &sample.exact)];
    let mut out = StepOutput::new(next(st, x.clone(), x, z, z_dual), grads);
    out.noise = sample.noise;
    out.residual = residual;
    Ok(out)
}

/// Frank-Wolfe: `z_k = lmo(∇f(x_k))`, `x_{k+1} = τz_k + (1−τ)x_k`.
///
/// The new state carries `z = z_k`. Aux entries: `lmo_certificate`, the minimum of
/// `⟨∇f(x_k), v − z_k⟩` over sampled `v` in the set, and `feasible`.
pub fn frank_wolfe_step(
    f: &Objective,
    set: &FeasibleSet,
    s: &DiscreteSchedule,
    st: &IterateState,
    lmo_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<StepOutput> {
    let tau = s.tau(st.k);
    let g = f.grad(&st.x)?;
    let v = set.lmo(&g)?;
    let x = &v * tau + &st.x * (1.0 - tau);
    let gv = g.dot(&v);
    let mut cert = f64::INFINITY;
    for _ in 0..lmo_samples {
        let p = set.sample(rng);
        cert = cert.min(g.dot(&p) - gv);
    }
    let feasible = set.contains(&x, 1e-12);
    let grads = vec![GradEval::new("x_prev", &st.x, &g)];
    let mut out = StepOutput::new(next(st, x.clone(), x, v.clone(), DualPoint::new(v)), grads);
    if lmo_samples > 0 {
        out.aux.insert("lmo_certificate".into(), cert / (1.0 + g.norm()));
    }
    out.aux.insert("feasible".into(), if feasible { 1.0 } else { 0.0 });
    Ok(out)
}

/// Mirror-prox step `argmin ψ(z) + ⟨g, z⟩ + (1/α)D_h(z, z_k)` for the supported pairs.
fn prox_mirror_step(
    c: &CompositeObjective,
    h: &DistanceGenerator,
    st: &IterateState,
    g: &Vector,
    alpha: f64,
) -> Result<(Vector, DualPoint)> {
    match (h.kind, h.domain) {
        (GeneratorKind::Euclidean, GeometryDomain::FullSpace { .. }) => {
            let z = c.prox(&(&st.z - g * alpha), alpha)?;
            Ok((z.clone(), DualPoint::new(z)))
        }
        // Every supported ψ is separable, so the box constraint is a clamp of the 1-D minimisers.
        (GeneratorKind::Euclidean, GeometryDomain::Box { lo, hi, .. }) => {
            let z = c.prox(&(&st.z - g * alpha), alpha)?.map(|v| v.clamp(lo, hi));
            Ok((z.clone(), DualPoint::new(z)))
        }
        (GeneratorKind::NegativeEntropy, _) => match c.simple {
            // ‖z‖₁ = 1 on the simplex, so the l1 term is constant there.
            SimplePart::None | SimplePart::L1 { .. } => h.mirror_step(&st.z_dual, &(-g * alpha)),
            other => Err(LabError::UnsupportedSimplePart(format!(
                "{} has no closed-form entropic prox",
                other.name()
            ))),
        },
        _ => match c.simple {
            SimplePart::None => h.mirror_step(&st.z_dual, &(-g * alpha)),
            other => Err(LabError::UnsupportedSimplePart(format!(
                "{} with geometry {} has no closed-form prox",
                other.name(),
                h.name()
            ))),
        },
    }
}

/// Accelerated proximal method with the Tseng coupling `y_{k+1} = τz_{k+1} + (1−τ)y_k`.
pub fn fista_step(c: &CompositeObjective, h: &DistanceGenerator, s: &DiscreteSchedule, st: &IterateState) -> Result<StepOutput> {
    let (alpha, tau) = (s.alpha(st.k), s.tau(st.k));
    let x = &st.z * tau + &st.y * (1.0 - tau);
    let g = c.smooth_grad(&x)?;
    let (z, z_dual) = prox_mirror_step(c, h, st, &g, alpha)?;
    let y = &z * tau + &st.y * (1.0 - tau);
    let grads = vec![GradEval::new("x", &x, &g)];
    Ok(StepOutput::new(next(st, x, y, z, z_dual), grads))
}

/// Strongly convex proximal method (Euclidean):
/// `z_{k+1} = prox_{(τ/μ)ψ}((1−τ)z_k + τx_k − (τ/μ)∇φ(x_k))` and the Tseng coupling for `y`.
pub fn prox_strong_step(c: &CompositeObjective, mu: f64, s: &DiscreteSchedule, st: &IterateState) -> Result<StepOutput> {
    let tau = s.tau(st.k);
    let x = (&st.z * tau + &st.y) / (1.0 + tau);
    let g = c.smooth_grad(&x)?;
    let w = &st.z * (1.0 - tau) + &x * tau - &g * (tau / mu);
    let z = c.prox(&w, tau / mu)?;
    let y = &z * tau + &st.y * (1.0 - tau);
    let grads = vec![GradEval::new("x", &x, &g)];
    Ok(StepOutput::new(next(st, x, y, z.clone(), DualPoint::new(z)), grads))
}

/// Descent with the regularised Taylor map: `x_{k+1} = G(x_k)`.
pub fn higher_order_descent_step(f: &Objective, gmap: &GradientMapSpec, st: &IterateState) -> Result<StepOutput> {
    let GradientMapSpec::UniversalHigher { .. } = gmap else {
        return Err(LabError::IncompatibleConfiguration(format!(
            "higher-order descent needs universal_higher, got {}",
            gmap.name()
        )));
    };
    let g = f.grad(&st.x)?;
    let out = apply_gradient_map(gmap, f, &st.x, &g)?;
    let gy = f.grad(&out.y)?;
    let grads = vec![GradEval::new("map_point", &st.x, &g), GradEval::new("y", &out.y, &gy)];
    let y = out.y;
    let mut res = StepOutput::new(next(st, y.clone(), y.clone(), y.clone(), DualPoint::new(y.clone())), grads);
    map_diagnostics(gmap, f, &st.x, &g, &y, Some(&gy), &mut res.aux)?;
    res.residual = out.residual;
    Ok(res)
}
