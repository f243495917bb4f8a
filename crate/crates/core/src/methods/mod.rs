//! Discrete algorithms as steppers, and `run` producing a [`Trace`].

mod gradient_map;
mod implicit;
mod schedule;
mod steppers;
mod stochastic;

pub use gradient_map::{apply_gradient_map, GradientMapSpec, MapOutput};
pub use implicit::{reference_solve, solve_implicit_strong, solve_implicit_weak, ImplicitSolution, MAX_INNER_ITERS, RESIDUAL_TOL};
pub use schedule::{schedule_feasibility, DiscreteSchedule, FeasibilityCondition, FeasibilityReport, ScheduleKind, TauConvention};
pub use steppers::{
    agd_family_i_step, agd_family_ii_step, agd_strong_step, fista_step, frank_wolfe_step, higher_order_descent_step,
    implicit_step, implicit_strong_step, prox_strong_step, quasi_monotone_strong_step, GradEval, StepOutput,
};
pub use stochastic::{GradSample, GradientOracle, NoiseSpec};

use crate::geometry::{uniform_simplex, DistanceGenerator, DualPoint, GeneratorKind, GeometryDomain};
use crate::problems::{CompositeObjective, FeasibleSet, Problem, ProblemInstance, SimplePart, SmoothnessMeta};
use crate::{LabError, Result, Vector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Every discrete method of the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    Implicit,
    ImplicitStrong,
    AgdFamilyI,
    AgdFamilyII,
    QuasiMonotone,
    AgdStrong,
    QuasiMonotoneStrong,
    FrankWolfe,
    Fista,
    ProxStrong,
    HigherOrderDescent,
}

impl MethodId {
    pub const ALL: [MethodId; 11] = [
        MethodId::Implicit,
        MethodId::ImplicitStrong,
        MethodId::AgdFamilyI,
        MethodId::AgdFamilyII,
        MethodId::QuasiMonotone,
        MethodId::AgdStrong,
        MethodId::QuasiMonotoneStrong,
        MethodId::FrankWolfe,
        MethodId::Fista,
        MethodId::ProxStrong,
        MethodId::HigherOrderDescent,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodId::Implicit => "implicit",
            MethodId::ImplicitStrong => "implicit_strong",
            MethodId::AgdFamilyI => "agd_family_I",
            MethodId::AgdFamilyII => "agd_family_II",
            MethodId::QuasiMonotone => "quasi_monotone",
            MethodId::AgdStrong => "agd_strong",
            MethodId::QuasiMonotoneStrong => "quasi_monotone_strong",
            MethodId::FrankWolfe => "frank_wolfe",
            MethodId::Fista => "fista",
            MethodId::ProxStrong => "prox_strong",
            MethodId::HigherOrderDescent => "higher_order_descent",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let low = s.to_ascii_lowercase();
        MethodId::ALL
            .iter()
            .copied()
            .find(|m| m.name().to_ascii_lowercase() == low)
            .or(match low.as_str() {
                "family_i_identity" => Some(MethodId::QuasiMonotone),
                _ => None,
            })
            .ok_or_else(|| LabError::ConfigError(format!("unknown method '{s}'")))
    }

    /// The `τ` convention each stepper is written in.
    pub fn convention(&self) -> TauConvention {
        match self {
            MethodId::Implicit | MethodId::ImplicitStrong | MethodId::QuasiMonotoneStrong => TauConvention::TauOverAk,
            _ => TauConvention::TauOverAk1,
        }
    }

    pub fn needs_mu(&self) -> bool {
        matches!(self, MethodId::ImplicitStrong | MethodId::AgdStrong | MethodId::QuasiMonotoneStrong | MethodId::ProxStrong)
    }

    /// Methods driven by a smoothness constant, for which `δ = √ε` is the default.
    pub fn is_smooth_accelerated(&self) -> bool {
        matches!(self, MethodId::AgdFamilyI | MethodId::AgdFamilyII | MethodId::AgdStrong | MethodId::Fista | MethodId::ProxStrong)
    }

    pub fn accepts_noise(&self) -> bool {
        matches!(self, MethodId::QuasiMonotone | MethodId::QuasiMonotoneStrong | MethodId::AgdStrong)
    }
}

/// Default time step: `√ε` with `ε = 1/L` for the smooth accelerated methods, `1` otherwise.
pub fn default_delta(method: MethodId, meta: &SmoothnessMeta) -> f64 {
    match (method.is_smooth_accelerated(), meta.lipschitz_grad_l) {
        (true, Some(l)) => (1.0 / l).sqrt(),
        _ => 1.0,
    }
}

/// Iterates `(x_k, y_k, z_k)` and the dual representative `∇h(z_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
    pub z_dual: DualPoint,
}

impl IterateState {
    pub fn start(h: &DistanceGenerator, x0: &Vector, z0: &Vector) -> Result<Self> {
        h.check_domain(x0)?;
        h.check_domain(z0)?;
        let (_, z_dual) = h.from_dual(h.grad(z0)?.coords)?;
        Ok(IterateState { k: 0, x: x0.clone(), y: x0.clone(), z: z0.clone(), z_dual })
    }
}

/// Method choice plus the knobs that are not part of the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: MethodId,
    pub gmap: Option<GradientMapSpec>,
    /// Overrides `μ` from the problem metadata.
    pub mu: Option<f64>,
    /// Geometry `h`; defaults from the problem's feasible set.
    pub geometry: Option<DistanceGenerator>,
    pub noise: Option<NoiseSpec>,
    pub x0: Option<Vector>,
    pub z0: Option<Vector>,
    /// Sampled points for the Frank-Wolfe LMO certificate.
    pub lmo_samples: usize,
}

impl MethodConfig {
    pub fn new(method: MethodId) -> Self {
        MethodConfig { method, gmap: None, mu: None, geometry: None, noise: None, x0: None, z0: None, lmo_samples: 4 }
    }

    pub fn with_gmap(mut self, g: GradientMapSpec) -> Self {
        self.gmap = Some(g);
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_geometry(mut self, h: DistanceGenerator) -> Self {
        self.geometry = Some(h);
        self
    }

    pub fn with_noise(mut self, n: NoiseSpec) -> Self {
        self.noise = Some(n);
        self
    }

    pub fn with_x0(mut self, x0: Vector) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_z0(mut self, z0: Vector) -> Self {
        self.z0 = Some(z0);
        self
    }
}

/// Stochastic-gradient counterparts of the three methods analysed with noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticBase {
    FamilyIIdentity,
    QuasiMonotoneStrong,
    AgdStrong,
}

/// Configuration running `base` with additive gradient noise; the seed passed to
/// [`run`] drives the draws.
pub fn stochastic_variant(base: StochasticBase, noise: NoiseSpec) -> Result<MethodConfig> {
    noise.validate()?;
    let method = match base {
        StochasticBase::FamilyIIdentity => MethodId::QuasiMonotone,
        StochasticBase::QuasiMonotoneStrong => MethodId::QuasiMonotoneStrong,
        StochasticBase::AgdStrong => MethodId::AgdStrong,
    };
    Ok(MethodConfig::new(method).with_noise(noise))
}

/// Everything the certifier needs to know about how a trace was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub method: MethodId,
    pub gmap: Option<GradientMapSpec>,
    pub geometry: DistanceGenerator,
    pub schedule: DiscreteSchedule,
    pub mu: Option<f64>,
    pub smoothness: SmoothnessMeta,
    pub simple: Option<SimplePart>,
    pub set: Option<FeasibleSet>,
    pub noise: Option<NoiseSpec>,
}

/// One trace entry. Record `k` holds the state after `k` steps, the gradients
/// used by the step that produced it, and the schedule values `A_k, α_k, τ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub state: IterateState,
    pub f_x: f64,
    pub f_y: f64,
    pub a_k: f64,
    pub alpha_k: f64,
    pub tau_k: f64,
    pub grads: Vec<GradEval>,
    pub noise: Option<Vector>,
    pub residual: f64,
    pub aux: BTreeMap<String, f64>,
}

impl StepRecord {
    pub fn grad(&self, label: &str) -> Option<&GradEval> {
        self.grads.iter().find(|g| g.label == label)
    }

    /// The gradient handed to the update (exact value plus noise).
    pub fn used_grad(&self, label: &str) -> Option<Vector> {
        self.grad(label).map(|g| match &self.noise {
            Some(n) => &g.value + n,
            None => g.value.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub method_id: String,
    pub problem_id: String,
    pub seed: u64,
    pub meta: TraceMeta,
    pub records: Vec<StepRecord>,
}

impl Trace {
    pub fn n_steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Largest relative mismatch between stored gradients and fresh oracle calls,
    /// over every `every`-th record.
    pub fn spot_check_gradients(&self, problem: &ProblemInstance, every: usize) -> Result<f64> {
        let smooth = match &problem.problem {
            Problem::Plain(o) => o,
            Problem::Composite(c) => &c.smooth,
        };
        let mut worst: f64 = 0.0;
        for rec in self.records.iter().step_by(every.max(1)) {
            for g in &rec.grads {
                let fresh = smooth.grad(&g.point)?;
                worst = worst.max((fresh - &g.value).norm() / (1.0 + g.value.norm()));
            }
        }
        Ok(worst)
    }
}

fn incompatible(msg: String) -> LabError {
    LabError::IncompatibleConfiguration(msg)
}

/// Geometry implied by a problem's feasible set.
pub fn default_geometry(problem: &ProblemInstance) -> Result<DistanceGenerator> {
    let n = problem.dim();
    Ok(match problem.set {
        Some(FeasibleSet::Simplex { .. }) => DistanceGenerator::negative_entropy(n),
        Some(FeasibleSet::Box { lo, hi, .. }) => DistanceGenerator::euclidean_box(lo, hi, n)?,
        _ => DistanceGenerator::euclidean(n),
    })
}

/// Start point when none is configured: the simplex barycentre, spread interior coordinates in a box,
/// a point inside the ball for the norm balls, and the all-ones vector otherwise.
pub fn default_x0(problem: &ProblemInstance, h: &DistanceGenerator) -> Vector {
    let n = problem.dim();
    match (problem.set, h.domain) {
        (Some(FeasibleSet::Simplex { .. }), _) | (_, GeometryDomain::Simplex { .. }) => uniform_simplex(n),
        (Some(FeasibleSet::Box { lo, hi, .. }), _) | (_, GeometryDomain::Box { lo, hi, .. }) => {
            // Coordinates spread over the box so separable problems do not move in lockstep.
            Vector::from_fn(n, |i, _| lo + (hi - lo) * (0.1 + 0.8 * (0.75 + 0.618_033_988_749_895 * i as f64).fract()))
        }
        (Some(FeasibleSet::L1Ball { radius, .. }), _) => Vector::from_element(n, 0.5 * radius / n as f64),
        (Some(FeasibleSet::L2Ball { radius, .. }), _) => Vector::from_element(n, 0.5 * radius / (n as f64).sqrt()),
        _ => Vector::from_element(n, 1.0),
    }
}

/// The resolved triple `(config, geometry, μ)` after the compatibility gate.
struct Resolved {
    gmap: Option<GradientMapSpec>,
    h: DistanceGenerator,
    mu: Option<f64>,
}

fn default_nesterov(meta: &SmoothnessMeta, method: MethodId) -> Result<GradientMapSpec> {
    match meta.lipschitz_grad_l {
        Some(l) => Ok(GradientMapSpec::Nesterov { eps: 1.0 / l }),
        None => Err(incompatible(format!(
            "{} needs a gradient map; the problem declares no Lipschitz constant for a default nesterov map",
            method.name()
        ))),
    }
}

/// The compatibility table.
fn resolve(cfg: &MethodConfig, problem: &ProblemInstance, schedule: &DiscreteSchedule) -> Result<Resolved> {
    let m = cfg.method;
    let meta = problem.meta();
    let h = match cfg.geometry {
        Some(h) => h,
        None => default_geometry(problem)?,
    };
    if h.dim() != problem.dim() {
        return Err(incompatible(format!("geometry dimension {} vs problem dimension {}", h.dim(), problem.dim())));
    }
    if schedule.convention != m.convention() {
        return Err(incompatible(format!(
            "{} is written with {}; schedule uses {}",
            m.name(),
            m.convention().name(),
            schedule.convention.name()
        )));
    }
    let composite = matches!(problem.problem, Problem::Composite(_));
    let is_prox = matches!(m, MethodId::Fista | MethodId::ProxStrong);
    if composite && !is_prox {
        return Err(incompatible(format!("{} is composite; {} needs a plain objective", problem.id(), m.name())));
    }
    if let Some(n) = cfg.noise {
        n.validate()?;
        if !m.accepts_noise() {
            return Err(incompatible(format!("{} has no stochastic variant", m.name())));
        }
    }
    let mu = cfg.mu.or(meta.strong_convexity_mu);
    if m.needs_mu() {
        match mu {
            Some(v) if v > 0.0 => {}
            _ => {
                return Err(incompatible(format!(
                    "{} needs a strongly convex problem; {} declares no mu",
                    m.name(),
                    problem.id()
                )))
            }
        }
    }
    let nonsmooth = match &problem.problem {
        Problem::Plain(o) => o.is_nonsmooth(),
        Problem::Composite(c) => c.smooth.is_nonsmooth(),
    };
    let full_space = matches!(h.domain, GeometryDomain::FullSpace { .. });
    let constant_tau = matches!(schedule.kind, ScheduleKind::Geometric { .. });

    let gmap = match m {
        MethodId::Implicit | MethodId::ImplicitStrong => {
            if nonsmooth {
                return Err(incompatible(format!("{} needs Hessians; {} is nonsmooth", m.name(), problem.id())));
            }
            if let GeometryDomain::Box { .. } = h.domain {
                return Err(incompatible(format!("{} does not support box geometries", m.name())));
            }
            reject_gmap(cfg, m)?
        }
        MethodId::QuasiMonotone => match cfg.gmap {
            None | Some(GradientMapSpec::IdentityXk1) => Some(GradientMapSpec::IdentityXk1),
            Some(g) => return Err(incompatible(format!("quasi_monotone fixes G = identity_xk1, got {}", g.name()))),
        },
        MethodId::AgdFamilyI | MethodId::AgdFamilyII | MethodId::AgdStrong => {
            let g = match cfg.gmap {
                Some(g) => g,
                None => default_nesterov(&meta, m)?,
            };
            g.validate()?;
            check_point_map(&g, m, &h, full_space, nonsmooth)?;
            if m == MethodId::AgdFamilyII && g == GradientMapSpec::TsengCoupled {
                return Err(incompatible("tseng_coupled applies to family I only".into()));
            }
            if m == MethodId::AgdStrong && !constant_tau {
                return Err(incompatible("agd_strong is restricted to constant-tau (geometric) schedules".into()));
            }
            Some(g)
        }
        MethodId::QuasiMonotoneStrong => reject_gmap(cfg, m)?,
        MethodId::FrankWolfe => {
            let Some(set) = problem.set else {
                return Err(incompatible(format!("frank_wolfe needs a feasible set; {} has none", problem.id())));
            };
            set.validate()?;
            reject_gmap(cfg, m)?
        }
        MethodId::Fista => {
            if nonsmooth {
                return Err(incompatible(format!("fista needs a smooth part; {} is nonsmooth", problem.id())));
            }
            reject_gmap(cfg, m)?
        }
        MethodId::ProxStrong => {
            if !(h.is_euclidean() && full_space) {
                return Err(incompatible("prox_strong is defined for Euclidean h on the full space".into()));
            }
            if nonsmooth {
                return Err(incompatible(format!("prox_strong needs a smooth part; {} is nonsmooth", problem.id())));
            }
            if !constant_tau {
                return Err(incompatible("prox_strong is restricted to constant-tau (geometric) schedules".into()));
            }
            reject_gmap(cfg, m)?
        }
        MethodId::HigherOrderDescent => match cfg.gmap {
            Some(g @ GradientMapSpec::UniversalHigher { .. }) => {
                g.validate()?;
                if !full_space {
                    return Err(incompatible("higher_order_descent runs on the full space".into()));
                }
                Some(g)
            }
            _ => return Err(incompatible("higher_order_descent needs a universal_higher gradient map".into())),
        },
    };
    Ok(Resolved { gmap, h, mu })
}

fn reject_gmap(cfg: &MethodConfig, m: MethodId) -> Result<Option<GradientMapSpec>> {
    match cfg.gmap {
        None => Ok(None),
        Some(g) => Err(incompatible(format!("{} takes no gradient map, got {}", m.name(), g.name()))),
    }
}

fn check_point_map(g: &GradientMapSpec, m: MethodId, h: &DistanceGenerator, full_space: bool, nonsmooth: bool) -> Result<()> {
    match g {
        GradientMapSpec::Nesterov { .. } | GradientMapSpec::UniversalNu { .. } | GradientMapSpec::UniversalHigher { .. } => {
            if !full_space {
                return Err(incompatible(format!(
                    "{} with {} leaves the domain of {}; use identity_xk1 or tseng_coupled",
                    m.name(),
                    g.name(),
                    h.name()
                )));
            }
            if nonsmooth && !matches!(g, GradientMapSpec::UniversalNu { .. }) {
                return Err(incompatible(format!("{} needs a smooth objective", g.name())));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn values(problem: &ProblemInstance, st: &IterateState) -> Result<(f64, f64)> {
    match &problem.problem {
        Problem::Plain(o) => Ok((o.value(&st.x)?, o.value(&st.y)?)),
        Problem::Composite(c) => Ok((c.value(&st.x)?, c.value(&st.y)?)),
    }
}

/// Method label used in traces and reports.
pub fn method_label(m: MethodId, gmap: Option<&GradientMapSpec>) -> String {
    match (m, gmap) {
        (MethodId::AgdFamilyI | MethodId::AgdFamilyII | MethodId::AgdStrong | MethodId::HigherOrderDescent, Some(g)) => {
            format!("{}+{}", m.name(), g.name())
        }
        _ => m.name().to_string(),
    }
}

/// Run `n_iters` steps. Identical inputs give identical traces.
pub fn run(cfg: &MethodConfig, problem: &ProblemInstance, schedule: &DiscreteSchedule, n_iters: usize, seed: u64) -> Result<Trace> {
    let r = resolve(cfg, problem, schedule)?;
    schedule.validate_horizon(n_iters)?;
    let h = r.h;
    let x0 = match &cfg.x0 {
        Some(x) => x.clone(),
        None => default_x0(problem, &h),
    };
    let z0 = cfg.z0.clone().unwrap_or_else(|| x0.clone());
    if x0.len() != problem.dim() || z0.len() != problem.dim() {
        return Err(LabError::ConfigError(format!("start point must have dimension {}", problem.dim())));
    }
    if let Some(set) = &problem.set {
        if cfg.method == MethodId::FrankWolfe && !set.contains(&x0, 1e-12) {
            return Err(LabError::DomainViolation("frank_wolfe start point is outside the feasible set".into()));
        }
    }
    let mut state = IterateState::start(&h, &x0, &z0)?;
    if let GeneratorKind::NegativeEntropy = h.kind {
        // Keep the dual representative in canonical form.
        state.z_dual = h.from_dual(state.z_dual.coords.clone())?.1;
    }
    let mut oracle = match cfg.noise {
        Some(n) => GradientOracle::noisy(n, seed),
        None => GradientOracle::exact(),
    };
    let mut lmo_rng = crate::linalg::rng(seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let composite = match &problem.problem {
        Problem::Composite(c) => c.clone(),
        Problem::Plain(o) => CompositeObjective::new(o.clone(), SimplePart::None),
    };
    let simple = match &problem.problem {
        Problem::Composite(c) => Some(c.simple),
        _ => None,
    };

    let record = |st: &IterateState, out: Option<StepOutput>| -> Result<StepRecord> {
        let (f_x, f_y) = values(problem, st)?;
        let k = st.k;
        let (grads, noise, residual, aux) = match out {
            Some(o) => (o.grads, o.noise, o.residual, o.aux),
            None => (Vec::new(), None, 0.0, BTreeMap::new()),
        };
        Ok(StepRecord {
            state: st.clone(),
            f_x,
            f_y,
            a_k: schedule.a(k),
            alpha_k: schedule.alpha(k),
            tau_k: schedule.tau(k),
            grads,
            noise,
            residual,
            aux,
        })
    };

    let mut records = Vec::with_capacity(n_iters + 1);
    records.push(record(&state, None)?);
    for _ in 0..n_iters {
        let out = match cfg.method {
            MethodId::Implicit => implicit_step(problem.objective()?, &h, schedule, &state)?,
            MethodId::ImplicitStrong => implicit_strong_step(problem.objective()?, &h, r.mu.unwrap_or(0.0), schedule, &state)?,
            MethodId::AgdFamilyI | MethodId::QuasiMonotone => {
                let g = r.gmap.as_ref().expect("resolved gradient map");
                agd_family_i_step(problem.objective()?, &h, schedule, &state, g, &mut oracle)?
            }
            MethodId::AgdFamilyII => {
                let g = r.gmap.as_ref().expect("resolved gradient map");
                agd_family_ii_step(problem.objective()?, &h, schedule, &state, g)?
            }
            MethodId::AgdStrong => {
                let g = r.gmap.as_ref().expect("resolved gradient map");
                agd_strong_step(problem.objective()?, &h, r.mu.unwrap_or(0.0), schedule, &state, g, &mut oracle)?
            }
            MethodId::QuasiMonotoneStrong => {
                quasi_monotone_strong_step(problem.objective()?, &h, r.mu.unwrap_or(0.0), schedule, &state, &mut oracle)?
            }
            MethodId::FrankWolfe => {
                let set = problem.set.as_ref().expect("checked feasible set");
                frank_wolfe_step(problem.objective()?, set, schedule, &state, cfg.lmo_samples, &mut lmo_rng)?
            }
            MethodId::Fista => fista_step(&composite, &h, schedule, &state)?,
            MethodId::ProxStrong => prox_strong_step(&composite, r.mu.unwrap_or(0.0), schedule, &state)?,
            MethodId::HigherOrderDescent => {
                let g = r.gmap.as_ref().expect("resolved gradient map");
                higher_order_descent_step(problem.objective()?, g, &state)?
            }
        };
        state = out.state.clone();
        records.push(record(&state, Some(out))?);
    }

    Ok(Trace {
        method_id: method_label(cfg.method, r.gmap.as_ref()),
        problem_id: problem.id().to_string(),
        seed,
        meta: TraceMeta {
            method: cfg.method,
            gmap: r.gmap,
            geometry: h,
            schedule: schedule.clone(),
            mu: r.mu,
            smoothness: problem.meta(),
            simple,
            set: problem.set,
            noise: cfg.noise,
        },
        records,
    })
}
