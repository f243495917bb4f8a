//! Continuous-time Euler–Lagrange dynamics, their Lyapunov functions and time dilation.
//!
//! Trajectories are integrated in `(X, ∇h(Z))` coordinates with
//! `Ẋ = e^{α_t}(Z_t − X_t)`, except for the Euclidean strongly convex case with
//! `β_t = γt`, which integrates `Ẍ + 2γẊ + (γ²/μ)∇f(X) = 0` directly.

mod integrator;
mod schedule;

pub use integrator::{integrate, IntegratorOpts, IntegratorStats};
pub use schedule::{BetaSpec, ContinuousSchedule, ScalingReport, TimeMap};

use crate::geometry::{DistanceGenerator, DualPoint};
use crate::problems::{CompositeObjective, Objective, ReferenceSolution, SimplePart};
use crate::{LabError, Result, Vector};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsKind {
    FirstEl,
    SecondEl,
    ProxFirst,
    ProxSecond,
}

impl DynamicsKind {
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsKind::FirstEl => "first_el",
            DynamicsKind::SecondEl => "second_el",
            DynamicsKind::ProxFirst => "prox_first",
            DynamicsKind::ProxSecond => "prox_second",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first_el" | "first" | "weak" => Ok(DynamicsKind::FirstEl),
            "second_el" | "second" | "strong" => Ok(DynamicsKind::SecondEl),
            "prox_first" => Ok(DynamicsKind::ProxFirst),
            "prox_second" => Ok(DynamicsKind::ProxSecond),
            _ => Err(LabError::ConfigError(format!("unknown dynamics '{s}'"))),
        }
    }

    fn strong(&self) -> bool {
        matches!(self, DynamicsKind::SecondEl | DynamicsKind::ProxSecond)
    }
}

/// `(t, X_t, Z_t)` with `Z_t = X_t + e^{−α_t}Ẋ_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousState {
    pub t: f64,
    pub x: Vector,
    pub z: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousSample {
    pub state: ContinuousState,
    /// Dual coordinates `∇h(Z_t)` as integrated.
    pub z_dual: Vector,
    /// `Ẋ_t`.
    pub velocity: Vector,
    /// `f(X_t)`, the full objective for proximal dynamics.
    pub f: f64,
    pub beta: f64,
    /// The matching Lyapunov function (weak or strong) at this sample.
    pub lyapunov: f64,
    /// Last accepted integrator step before this sample.
    pub step_size: f64,
}

impl ContinuousSample {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousTrace {
    pub kind: DynamicsKind,
    pub problem_id: String,
    pub schedule: ContinuousSchedule,
    pub geometry: DistanceGenerator,
    pub mu: Option<f64>,
    /// Relative integrator tolerance used.
    pub tol: f64,
    pub f_star: f64,
    pub x_star: Vector,
    pub samples: Vec<ContinuousSample>,
    pub stats: IntegratorStats,
}

impl ContinuousTrace {
    pub fn lyapunov_kind(&self) -> ContinuousLyapunovKind {
        if self.kind.strong() {
            ContinuousLyapunovKind::Strong
        } else {
            ContinuousLyapunovKind::Weak
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.t).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.f - self.f_star).collect()
    }
}

/// The gradient field driving a simulation.
struct Field<'a> {
    smooth: &'a Objective,
    simple: SimplePart,
}

impl Field<'_> {
    fn value(&self, x: &Vector) -> Result<f64> {
        Ok(self.smooth.value(x)? + self.simple.value(x))
    }

    /// `∇φ(X) + ∇ψ(Z)`.
    fn drive(&self, x: &Vector, z: &Vector) -> Result<Vector> {
        let mut g = self.smooth.grad(x)?;
        if self.simple != SimplePart::None {
            g += self.simple.grad(z);
        }
        Ok(g)
    }
}

fn mirror(h: &DistanceGenerator, theta: Vector) -> Result<Vector> {
    h.mirror_inverse(&DualPoint::new(theta)).map_err(|e| LabError::MirrorInversionFailure(e.to_string()))
}

fn plain_reference(f: &Objective) -> Result<ReferenceSolution> {
    match f.reference() {
        Ok(r) => Ok(r.clone()),
        Err(_) => {
            let x = crate::methods::reference_solve(f, 1e-12)?;
            let fv = f.value(&x)?;
            Ok(ReferenceSolution { x_star: x, f_star: fv, provenance: crate::problems::Provenance::HighAccuracySolve(1e-12) })
        }
    }
}

fn composite_reference(c: &CompositeObjective) -> Result<ReferenceSolution> {
    match (c.reference(), c.simple) {
        (Ok(r), _) => Ok(r.clone()),
        (Err(_), SimplePart::None) => plain_reference(&c.smooth),
        (Err(e), _) => Err(e),
    }
}

struct Setup<'a> {
    kind: DynamicsKind,
    field: Field<'a>,
    h: &'a DistanceGenerator,
    mu: Option<f64>,
    s: &'a ContinuousSchedule,
    reference: ReferenceSolution,
    problem_id: String,
}

#[allow(clippy::too_many_arguments)]
fn simulate(setup: Setup<'_>, x0: &Vector, v0: Option<&Vector>, t0: f64, t1: f64, opts: &IntegratorOpts) -> Result<ContinuousTrace> {
    let Setup { kind, field, h, mu, s, reference, problem_id } = setup;
    s.validate(t0)?;
    let n = h.dim();
    if x0.len() != n || field.smooth.dim != n {
        return Err(LabError::ConfigError(format!("dimension mismatch: geometry {n}, x0 {}, problem {}", x0.len(), field.smooth.dim)));
    }
    h.check_domain(x0)?;
    if let Some(m) = mu {
        if !(m > 0.0) {
            return Err(LabError::ConfigError(format!("mu must be positive, got {m}")));
        }
    }
    if field.simple != SimplePart::None && !field.simple.is_smooth() {
        return Err(LabError::UnsupportedSimplePart(format!(
            "{} is not differentiable along a trajectory",
            field.simple.name()
        )));
    }
    let zeros = Vector::zeros(n);
    let v0 = v0.unwrap_or(&zeros);
    let z0 = x0 + v0 / s.e_alpha(t0);
    h.check_domain(&z0).map_err(|e| LabError::DomainViolation(format!("initial Z: {e}")))?;
    let theta0 = h.grad(&z0)?.coords;
    let mu_v = mu.unwrap_or(0.0);
    // Euclidean strongly convex dynamics with β = γt in (X, Ẋ) coordinates.
    let second_order = kind == DynamicsKind::SecondEl && h.is_euclidean() && s.linear_gamma().is_some();
    let gamma = s.linear_gamma().unwrap_or(0.0);

    let mut rhs = |t: f64, y: &Vector| -> Result<Vector> {
        let x = y.rows(0, n).into_owned();
        let w = y.rows(n, n).into_owned();
        let mut out = Vector::zeros(2 * n);
        if second_order {
            let g = field.smooth.grad(&x)?;
            out.rows_mut(0, n).copy_from(&w);
            out.rows_mut(n, n).copy_from(&(-2.0 * gamma * &w - (gamma * gamma / mu_v) * g));
            return Ok(out);
        }
        let z = mirror(h, w.clone())?;
        let ea = s.e_alpha(t);
        let g = field.drive(&x, &z)?;
        out.rows_mut(0, n).copy_from(&(ea * (&z - &x)));
        let dtheta = if kind.strong() {
            let hx = h.grad(&x)?.coords;
            s.beta_dot(t) * (hx - &w) - (ea / mu_v) * g
        } else {
            -(ea * s.beta(t).exp()) * g
        };
        out.rows_mut(n, n).copy_from(&dtheta);
        Ok(out)
    };

    let mut y0 = Vector::zeros(2 * n);
    y0.rows_mut(0, n).copy_from(x0);
    if second_order {
        y0.rows_mut(n, n).copy_from(v0);
    } else {
        y0.rows_mut(n, n).copy_from(&theta0);
    }

    let mut samples = Vec::new();
    let lk = if kind.strong() { ContinuousLyapunovKind::Strong } else { ContinuousLyapunovKind::Weak };
    let mut on_sample = |t: f64, y: &Vector, step: f64| -> Result<()> {
        let x = y.rows(0, n).into_owned();
        let w = y.rows(n, n).into_owned();
        let (z, z_dual, v) = if second_order {
            let z = &x + &w / gamma;
            (z.clone(), z, w)
        } else {
            let z = mirror(h, w.clone())?;
            let v = s.e_alpha(t) * (&z - &x);
            (z, w, v)
        };
        let f = field.value(&x)?;
        let beta = s.beta(t);
        let lyapunov = lyapunov_value(lk, h, &z_dual, f, beta, &reference, mu)?;
        samples.push(ContinuousSample { state: ContinuousState { t, x, z }, z_dual, velocity: v, f, beta, lyapunov, step_size: step });
        Ok(())
    };
    let stats = integrate(&mut rhs, t0, y0, t1, opts, &mut on_sample)?;
    Ok(ContinuousTrace {
        kind,
        problem_id,
        schedule: s.clone(),
        geometry: *h,
        mu,
        tol: opts.rtol,
        f_star: reference.f_star,
        x_star: reference.x_star,
        samples,
        stats,
    })
}

/// Weak dynamics: `d/dt ∇h(Z_t) = −e^{α_t+β_t}∇f(X_t)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_first_el(
    f: &Objective,
    h: &DistanceGenerator,
    s: &ContinuousSchedule,
    x0: &Vector,
    v0: Option<&Vector>,
    t0: f64,
    t1: f64,
    opts: &IntegratorOpts,
) -> Result<ContinuousTrace> {
    let setup = Setup {
        kind: DynamicsKind::FirstEl,
        field: Field { smooth: f, simple: SimplePart::None },
        h,
        mu: None,
        s,
        reference: plain_reference(f)?,
        problem_id: f.id.clone(),
    };
    simulate(setup, x0, v0, t0, t1, opts)
}

/// Strongly convex dynamics: `d/dt ∇h(Z_t) = β̇_t(∇h(X_t) − ∇h(Z_t)) − (e^{α_t}/μ)∇f(X_t)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_second_el(
    f: &Objective,
    h: &DistanceGenerator,
    mu: f64,
    s: &ContinuousSchedule,
    x0: &Vector,
    v0: Option<&Vector>,
    t0: f64,
    t1: f64,
    opts: &IntegratorOpts,
) -> Result<ContinuousTrace> {
    let setup = Setup {
        kind: DynamicsKind::SecondEl,
        field: Field { smooth: f, simple: SimplePart::None },
        h,
        mu: Some(mu),
        s,
        reference: plain_reference(f)?,
        problem_id: f.id.clone(),
    };
    simulate(setup, x0, v0, t0, t1, opts)
}

/// Proximal weak dynamics: the simple part's gradient is taken at `Z_t`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_prox_first(
    c: &CompositeObjective,
    h: &DistanceGenerator,
    s: &ContinuousSchedule,
    x0: &Vector,
    v0: Option<&Vector>,
    t0: f64,
    t1: f64,
    opts: &IntegratorOpts,
) -> Result<ContinuousTrace> {
    let setup = Setup {
        kind: if c.simple == SimplePart::None { DynamicsKind::FirstEl } else { DynamicsKind::ProxFirst },
        field: Field { smooth: &c.smooth, simple: c.simple },
        h,
        mu: None,
        s,
        reference: composite_reference(c)?,
        problem_id: c.id().to_string(),
    };
    let mut tr = simulate(setup, x0, v0, t0, t1, opts)?;
    tr.kind = DynamicsKind::ProxFirst;
    Ok(tr)
}

/// Proximal strongly convex dynamics.
#[allow(clippy::too_many_arguments)]
pub fn simulate_prox_second(
    c: &CompositeObjective,
    h: &DistanceGenerator,
    mu: f64,
    s: &ContinuousSchedule,
    x0: &Vector,
    v0: Option<&Vector>,
    t0: f64,
    t1: f64,
    opts: &IntegratorOpts,
) -> Result<ContinuousTrace> {
    let setup = Setup {
        kind: DynamicsKind::ProxSecond,
        field: Field { smooth: &c.smooth, simple: c.simple },
        h,
        mu: Some(mu),
        s,
        reference: composite_reference(c)?,
        problem_id: c.id().to_string(),
    };
    simulate(setup, x0, v0, t0, t1, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuousLyapunovKind {
    /// `D_h(x*, Z_t) + e^{β_t}(f(X_t) − f*)`.
    Weak,
    /// `e^{β_t}(μD_h(x*, Z_t) + f(X_t) − f*)`.
    Strong,
    /// `e^{β_t}(f(X_t) − f*)`.
    FrankWolfe,
}

impl ContinuousLyapunovKind {
    pub fn name(&self) -> &'static str {
        match self {
            ContinuousLyapunovKind::Weak => "weak",
            ContinuousLyapunovKind::Strong => "strong",
            ContinuousLyapunovKind::FrankWolfe => "frank_wolfe",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "weak" => Ok(ContinuousLyapunovKind::Weak),
            "strong" => Ok(ContinuousLyapunovKind::Strong),
            "frank_wolfe" => Ok(ContinuousLyapunovKind::FrankWolfe),
            _ => Err(LabError::ConfigError(format!("unknown continuous Lyapunov kind '{s}'"))),
        }
    }
}

fn lyapunov_value(
    kind: ContinuousLyapunovKind,
    h: &DistanceGenerator,
    z_dual: &Vector,
    f: f64,
    beta: f64,
    reference: &ReferenceSolution,
    mu: Option<f64>,
) -> Result<f64> {
    let eb = beta.exp();
    let gap = f - reference.f_star;
    let e = match kind {
        ContinuousLyapunovKind::FrankWolfe => eb * gap,
        ContinuousLyapunovKind::Weak => h.divergence_from_dual(&reference.x_star, &DualPoint::new(z_dual.clone()))? + eb * gap,
        ContinuousLyapunovKind::Strong => {
            let d = h.divergence_from_dual(&reference.x_star, &DualPoint::new(z_dual.clone()))?;
            eb * (mu.unwrap_or(0.0) * d + gap)
        }
    };
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousLyapunovReport {
    pub kind: ContinuousLyapunovKind,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    /// `10 × tol × max|E|`.
    pub slack: f64,
    /// Largest `E_{t_{i+1}} − E_{t_i}`.
    pub max_increase: f64,
    pub first_violation: Option<usize>,
    pub nonincreasing: bool,
    /// `e^{β_t}(f(X_t) − f*) ≤ E_{t0}` at every sample, within the slack.
    pub rate_bound_holds: bool,
}

/// Evaluate a Lyapunov function along a trace and test that it is nonincreasing.
pub fn continuous_lyapunov(
    trace: &ContinuousTrace,
    kind: ContinuousLyapunovKind,
    x_star: &Vector,
    f_star: f64,
    mu: Option<f64>,
) -> Result<ContinuousLyapunovReport> {
    if trace.samples.is_empty() {
        return Err(LabError::EmptySeries("continuous trace has no samples".into()));
    }
    let reference = ReferenceSolution { x_star: x_star.clone(), f_star, provenance: crate::problems::Provenance::ClosedForm };
    let mu = mu.or(trace.mu);
    let mut values = Vec::with_capacity(trace.samples.len());
    for s in &trace.samples {
        values.push(lyapunov_value(kind, &trace.geometry, &s.z_dual, s.f, s.beta, &reference, mu)?);
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = 10.0 * trace.tol * scale;
    let mut max_inc = f64::NEG_INFINITY;
    let mut first = None;
    for i in 1..values.len() {
        let d = values[i] - values[i - 1];
        max_inc = max_inc.max(d);
        if d > slack && first.is_none() {
            first = Some(i - 1);
        }
    }
    let e0 = values[0];
    let rate_ok = trace.samples.iter().all(|s| s.beta.exp() * (s.f - f_star) <= e0 + slack);
    Ok(ContinuousLyapunovReport {
        kind,
        t: trace.times(),
        values,
        slack,
        max_increase: if max_inc.is_finite() { max_inc } else { 0.0 },
        first_violation: first,
        nonincreasing: first.is_none(),
        rate_bound_holds: rate_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationReport {
    pub tau: TimeMap,
    pub samples: usize,
    /// `max ‖Y_t − X_{τ(t)}‖`.
    pub max_deviation: f64,
    pub scale: f64,
    /// `10 × tol × scale`.
    pub threshold: f64,
    pub pass: bool,
}

/// Integrate the weak dynamics under `β` and under `β̃_t = β_{τ(t)}` and compare `Y_t` with `X_{τ(t)}`.
#[allow(clippy::too_many_arguments)]
pub fn time_dilation_check(
    f: &Objective,
    h: &DistanceGenerator,
    s: &ContinuousSchedule,
    tau: TimeMap,
    x0: &Vector,
    v0: Option<&Vector>,
    t0: f64,
    t1: f64,
    opts: &IntegratorOpts,
) -> Result<DilationReport> {
    tau.validate()?;
    let u0 = tau.inverse(t0);
    let u1 = tau.inverse(t1);
    let us = opts.output_times(u0, u1);
    let ts: Vec<f64> = us.iter().map(|&u| tau.eval(u)).collect();
    let x_end = *ts.last().unwrap_or(&t1);
    let ox = IntegratorOpts { sample_times: ts, ..opts.clone() };
    let oy = IntegratorOpts { sample_times: us, ..opts.clone() };
    let xt = simulate_first_el(f, h, s, x0, v0, tau.eval(u0), x_end, &ox)?;
    let vy = v0.map(|v| v * tau.deriv(u0));
    let yt = simulate_first_el(f, h, &s.dilated(tau), x0, vy.as_ref(), u0, u1, &oy)?;
    if xt.samples.len() != yt.samples.len() {
        return Err(LabError::ConfigError(format!(
            "sample counts differ after reparameterisation ({} vs {})",
            xt.samples.len(),
            yt.samples.len()
        )));
    }
    let mut dev: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (a, b) in xt.samples.iter().zip(&yt.samples) {
        dev = dev.max((&a.state.x - &b.state.x).norm());
        scale = scale.max(a.state.x.norm());
    }
    let threshold = 10.0 * opts.rtol * scale;
    Ok(DilationReport { tau, samples: xt.samples.len(), max_deviation: dev, scale, threshold, pass: dev <= threshold })
}
