//! Deterministic problem instances addressable by name.

use super::composite::{CompositeObjective, SimplePart};
use super::objective::{HolderMeta, Objective, ObjectiveKind, Provenance, ReferenceSolution, SmoothnessMeta};
use super::sets::FeasibleSet;
use crate::linalg::{gaussian_matrix, gaussian_vector, random_orthogonal, rng, symmetric_eigenvalues};
use crate::{LabError, Matrix, Result, Vector};
use rand::Rng;
use std::collections::BTreeMap;

/// Named numeric parameters (`kappa`, `lambda`, `rows`, ...).
pub type CorpusParams = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Plain(Objective),
    Composite(CompositeObjective),
}

/// A corpus entry: the objective plus an optional feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub name: String,
    pub problem: Problem,
    pub set: Option<FeasibleSet>,
}

impl ProblemInstance {
    pub fn id(&self) -> &str {
        match &self.problem {
            Problem::Plain(o) => &o.id,
            Problem::Composite(c) => c.id(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.problem {
            Problem::Plain(o) => o.dim,
            Problem::Composite(c) => c.dim(),
        }
    }

    /// The problem as a composite objective (ψ ≡ 0 for plain objectives).
    pub fn as_composite(&self) -> CompositeObjective {
        match &self.problem {
            Problem::Plain(o) => {
                let mut c = CompositeObjective::new(o.clone(), SimplePart::None);
                c.reference = o.reference.clone();
                c
            }
            Problem::Composite(c) => c.clone(),
        }
    }

    pub fn objective(&self) -> Result<&Objective> {
        match &self.problem {
            Problem::Plain(o) => Ok(o),
            Problem::Composite(c) => Err(LabError::IncompatibleConfiguration(format!(
                "{} is composite; use a proximal method",
                c.id()
            ))),
        }
    }

    pub fn meta(&self) -> SmoothnessMeta {
        match &self.problem {
            Problem::Plain(o) => o.meta,
            Problem::Composite(c) => c.smooth.meta,
        }
    }

    pub fn reference(&self) -> Result<&ReferenceSolution> {
        match &self.problem {
            Problem::Plain(o) => o.reference(),
            Problem::Composite(c) => c.reference(),
        }
    }
}

pub fn corpus_names() -> &'static [&'static str] {
    &[
        "quadratic_illcond",
        "quadratic_identity",
        "logsumexp",
        "lasso",
        "l1_on_box",
        "logistic",
        "l1_ridge",
        "simplex_quadratic",
        "simplex_holder",
        "quad_quartic",
        "relative_entropy",
    ]
}

fn param(p: &CorpusParams, key: &str, default: f64) -> f64 {
    p.get(key).copied().unwrap_or(default)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::ConfigError(format!("parameter {name} must be positive, got {v}")))
    }
}

fn rows_param(p: &CorpusParams, dim: usize) -> Result<usize> {
    let r = param(p, "rows", 2.0 * dim as f64);
    if r < 1.0 || r.fract() != 0.0 {
        return Err(LabError::ConfigError(format!("rows must be a positive integer, got {r}")));
    }
    Ok(r as usize)
}

/// Build a corpus instance. Unknown names give [`LabError::UnknownProblem`].
pub fn corpus(name: &str, dim: usize, seed: u64, params: &CorpusParams) -> Result<ProblemInstance> {
    if dim == 0 {
        return Err(LabError::ConfigError("dimension must be positive".into()));
    }
    let mut r = rng(seed);
    let id = format!("{name}(dim={dim},seed={seed})");
    let plain = |o: Objective| ProblemInstance { name: name.to_string(), problem: Problem::Plain(o), set: None };
    match name {
        "quadratic_illcond" => {
            let kappa = positive("kappa", param(params, "kappa", 1e3))?;
            let l = positive("L", param(params, "L", 1.0))?;
            Ok(plain(quadratic_illcond(&id, dim, kappa, l, &mut r)))
        }
        "quadratic_identity" => {
            let q = Matrix::identity(dim, dim);
            let o = Objective::new(
                id,
                dim,
                ObjectiveKind::Quadratic { q, center: Vector::zeros(dim), offset: 0.0 },
                SmoothnessMeta {
                    lipschitz_grad_l: Some(1.0),
                    strong_convexity_mu: Some(1.0),
                    holder: Some(HolderMeta { epsilon: 1.0, nu: 1.0, order: 2 }),
                    subgradient_bound_g: None,
                },
            )
            .with_reference(ReferenceSolution { x_star: Vector::zeros(dim), f_star: 0.0, provenance: Provenance::ClosedForm });
            Ok(plain(o))
        }
        "logsumexp" => {
            let m = rows_param(params, dim)?;
            let lambda = positive("lambda", param(params, "lambda", 1e-2))?;
            let a = gaussian_matrix(&mut r, m, dim) / (dim as f64).sqrt();
            let b = gaussian_vector(&mut r, m) * 0.5;
            let top = symmetric_eigenvalues(&(a.transpose() * &a)).max();
            let o = Objective::new(
                id,
                dim,
                ObjectiveKind::LogSumExp { a, b, lambda },
                SmoothnessMeta {
                    lipschitz_grad_l: Some(top + lambda),
                    strong_convexity_mu: Some(lambda),
                    holder: None,
                    subgradient_bound_g: None,
                },
            );
            Ok(plain(with_solved_reference(o)?))
        }
        "logistic" => {
            let m = rows_param(params, dim)?;
            let lambda = positive("lambda", param(params, "lambda", 1e-2))?;
            let a = gaussian_matrix(&mut r, m, dim);
            let w = gaussian_vector(&mut r, dim);
            let labels = Vector::from_iterator(
                m,
                (0..m).map(|i| {
                    let t = a.row(i).transpose().dot(&w) + 0.5 * r.gen_range(-1.0..1.0);
                    if t >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }),
            );
            let top = symmetric_eigenvalues(&(a.transpose() * &a)).max();
            let o = Objective::new(
                id,
                dim,
                ObjectiveKind::Logistic { a, labels, lambda },
                SmoothnessMeta {
                    lipschitz_grad_l: Some(top / (4.0 * m as f64) + lambda),
                    strong_convexity_mu: Some(lambda),
                    holder: None,
                    subgradient_bound_g: None,
                },
            );
            Ok(plain(with_solved_reference(o)?))
        }
        "lasso" => {
            let m = rows_param(params, dim)?;
            let lambda = positive("lambda", param(params, "lambda", 0.1))?;
            let ridge = param(params, "ridge", 0.0);
            if ridge < 0.0 {
                return Err(LabError::ConfigError("ridge must be nonnegative".into()));
            }
            let a = gaussian_matrix(&mut r, m, dim) / (m as f64).sqrt();
            let support = (dim / 10).max(1);
            let mut xt = Vector::zeros(dim);
            for i in 0..support {
                xt[i] = gaussian_vector(&mut r, 1)[0] + if i % 2 == 0 { 1.0 } else { -1.0 };
            }
            let b = &a * &xt + gaussian_vector(&mut r, m) * 0.05;
            let eig = symmetric_eigenvalues(&(a.transpose() * &a));
            let mu = eig.min() + ridge;
            let meta = SmoothnessMeta {
                lipschitz_grad_l: Some(eig.max() + ridge),
                strong_convexity_mu: if mu > 1e-10 { Some(mu) } else { None },
                holder: None,
                subgradient_bound_g: None,
            };
            let smooth = Objective::new(id, dim, ObjectiveKind::LeastSquares { a, b, ridge }, meta);
            let mut c = CompositeObjective::new(smooth, SimplePart::L1 { weight: lambda });
            c.reference = Some(solve_composite_reference(&c)?);
            Ok(ProblemInstance { name: name.to_string(), problem: Problem::Composite(c), set: None })
        }
        "l1_on_box" => {
            let half = positive("half_width", param(params, "half_width", 1.0))?;
            let o = Objective::new(
                id,
                dim,
                ObjectiveKind::L1 { center: Vector::zeros(dim), weight: 1.0 },
                SmoothnessMeta { subgradient_bound_g: Some((dim as f64).sqrt()), ..Default::default() },
            )
            .with_reference(ReferenceSolution { x_star: Vector::zeros(dim), f_star: 0.0, provenance: Provenance::ClosedForm });
            Ok(ProblemInstance {
                name: name.to_string(),
                problem: Problem::Plain(o),
                set: Some(FeasibleSet::Box { lo: -half, hi: half, dim }),
            })
        }
        "l1_ridge" => {
            let mu = positive("mu", param(params, "mu", 1.0))?;
            let weight = positive("weight", param(params, "weight", 1.0))?;
            // |μ c_i| ≤ w keeps x* = c.
            let cmax = weight / mu * 0.8;
            let center = Vector::from_iterator(dim, (0..dim).map(|_| r.gen_range(-cmax..cmax)));
            let f_star = 0.5 * mu * center.norm_squared();
            let o = Objective::new(
                id,
                dim,
                ObjectiveKind::L1Ridge { center: center.clone(), weight, mu },
                SmoothnessMeta { strong_convexity_mu: Some(mu), ..Default::default() },
            )
            .with_reference(ReferenceSolution { x_star: center, f_star, provenance: Provenance::ClosedForm });
            Ok(plain(o))
        }
        "simplex_quadratic" => {
            let kappa = positive("kappa", param(params, "kappa", 10.0))?;
            let margin = param(params, "margin", 1.0);
            if !(margin >= 0.0 && margin.is_finite()) {
                return Err(LabError::ConfigError(format!("margin must be nonnegative, got {margin}")));
            }
            Ok(simplex_quadratic(&id, dim, kappa, margin, &mut r))
        }
        "simplex_holder" => {
            let nu = param(params, "nu", 0.5);
            if !(nu > 0.0 && nu <= 1.0) {
                return Err(LabError::ConfigError(format!("nu must lie in (0,1], got {nu}")));
            }
            let center = crate::geometry::sample_simplex(&mut r, dim);
            // ‖|a|^ν sign a − |b|^ν sign b‖ ≤ 2^{1−ν} n^{(1−ν)/2} ‖a − b‖^ν.
            let inv_eps = 2f64.powf(1.0 - nu) * (dim as f64).powf((1.0 - nu) / 2.0);
            let o = Objective::new(
                id,
                dim,
                ObjectiveKind::HolderPower { center: center.clone(), nu, weight: 1.0 },
                SmoothnessMeta {
                    holder: Some(HolderMeta { epsilon: 1.0 / inv_eps, nu, order: 2 }),
                    ..Default::default()
                },
            )
            .with_reference(ReferenceSolution { x_star: center, f_star: 0.0, provenance: Provenance::ClosedForm });
            Ok(ProblemInstance { name: name.to_string(), problem: Problem::Plain(o), set: Some(FeasibleSet::Simplex { dim }) })
        }
        "quad_quartic" => {
            let quartic = positive("quartic", param(params, "quartic", 1.0))?;
            let radius = positive("radius", param(params, "radius", 2.0))?;
            let low = param(params, "low", 0.0);
            if low < 0.0 {
                return Err(LabError::ConfigError("low must be nonnegative".into()));
            }
            // Diagonal quadratic with eigenvalues from 1 down to `low`.
            let q = Matrix::from_diagonal(&Vector::from_iterator(
                dim,
                (0..dim).map(|i| if dim == 1 { 1.0 } else { 1.0 - (1.0 - low) * i as f64 / (dim - 1) as f64 }),
            ));
            // ∇²f(x) − ∇²f(y) = 3c·diag(x_i² − y_i²), bounded by 6cR‖x − y‖ when ‖·‖_∞ ≤ R.
            let hess_lip = 6.0 * quartic * radius;
            let o = Objective::new(
                id,
                dim,
                ObjectiveKind::QuadPlusQuartic { q, quartic },
                SmoothnessMeta {
                    lipschitz_grad_l: Some(1.0 + 3.0 * quartic * radius * radius),
                    strong_convexity_mu: if low > 0.0 { Some(low) } else { None },
                    holder: Some(HolderMeta { epsilon: 1.0 / hess_lip, nu: 1.0, order: 3 }),
                    subgradient_bound_g: None,
                },
            )
            .with_reference(ReferenceSolution { x_star: Vector::zeros(dim), f_star: 0.0, provenance: Provenance::ClosedForm });
            Ok(plain(o))
        }
        "relative_entropy" => {
            let mu = positive("mu", param(params, "mu", 1.0))?;
            let center = crate::geometry::sample_simplex(&mut r, dim);
            let o = Objective::new(
                id,
                dim,
                ObjectiveKind::RelativeEntropy { center: center.clone(), mu },
                SmoothnessMeta { strong_convexity_mu: Some(mu), ..Default::default() },
            )
            .with_reference(ReferenceSolution { x_star: center, f_star: 0.0, provenance: Provenance::ClosedForm });
            Ok(ProblemInstance { name: name.to_string(), problem: Problem::Plain(o), set: Some(FeasibleSet::Simplex { dim }) })
        }
        _ => Err(LabError::UnknownProblem(format!(
            "{name}; known problems: {}",
            corpus_names().join(", ")
        ))),
    }
}

/// Constructed spectrum `λ_i = L κ^{−i/(n−1)}` in a random orthogonal basis, `b` Gaussian.
fn quadratic_illcond(id: &str, dim: usize, kappa: f64, l: f64, r: &mut rand_chacha::ChaCha8Rng) -> Objective {
    let u = random_orthogonal(r, dim);
    let eig = Vector::from_iterator(
        dim,
        (0..dim).map(|i| if dim == 1 { l } else { l * kappa.powf(-(i as f64) / (dim - 1) as f64) }),
    );
    let q = &u * Matrix::from_diagonal(&eig) * u.transpose();
    let q = (&q + q.transpose()) * 0.5;
    let b = gaussian_vector(r, dim);
    let x_star = &u * Matrix::from_diagonal(&eig.map(|e| 1.0 / e)) * (u.transpose() * &b);
    let f_star = -0.5 * b.dot(&x_star);
    Objective::new(
        id,
        dim,
        ObjectiveKind::Quadratic { q, center: x_star.clone(), offset: f_star },
        SmoothnessMeta {
            lipschitz_grad_l: Some(eig.max()),
            strong_convexity_mu: Some(eig.min()),
            holder: Some(HolderMeta { epsilon: 1.0 / eig.max(), nu: 1.0, order: 2 }),
            subgradient_bound_g: None,
        },
    )
    .with_reference(ReferenceSolution { x_star, f_star, provenance: Provenance::ClosedForm })
}

/// Quadratic whose simplex minimiser is a chosen point on a face. `margin` scales
/// the complementarity gap off the support; zero makes the problem degenerate.
fn simplex_quadratic(id: &str, dim: usize, kappa: f64, margin: f64, r: &mut rand_chacha::ChaCha8Rng) -> ProblemInstance {
    let u = random_orthogonal(r, dim);
    let eig = Vector::from_iterator(
        dim,
        (0..dim).map(|i| if dim == 1 { 1.0 } else { kappa.powf(-(i as f64) / (dim - 1) as f64) }),
    );
    let q = &u * Matrix::from_diagonal(&eig) * u.transpose();
    let q = (&q + q.transpose()) * 0.5;
    let support = (dim / 2).max(1);
    let mut x_star = Vector::zeros(dim);
    let w = crate::geometry::sample_simplex(r, support);
    for i in 0..support {
        x_star[i] = 0.5 * w[i] + 0.5 / support as f64;
    }
    // ∇f(x*) = λ·1 + s with s = 0 on the support and s > 0 off it.
    let lambda = -0.5;
    let mut g = Vector::from_element(dim, lambda);
    for i in support..dim {
        g[i] += margin * r.gen_range(0.1..0.5);
    }
    let qinv = &u * Matrix::from_diagonal(&eig.map(|e| 1.0 / e)) * u.transpose();
    let center = &x_star - qinv * &g;
    let d = &x_star - &center;
    let f_star = 0.5 * d.dot(&(&q * &d));
    let o = Objective::new(
        id,
        dim,
        ObjectiveKind::Quadratic { q, center, offset: 0.0 },
        SmoothnessMeta {
            lipschitz_grad_l: Some(eig.max()),
            strong_convexity_mu: Some(eig.min()),
            holder: Some(HolderMeta { epsilon: 1.0 / eig.max(), nu: 1.0, order: 2 }),
            subgradient_bound_g: None,
        },
    )
    .with_reference(ReferenceSolution { x_star, f_star, provenance: Provenance::ClosedForm });
    ProblemInstance { name: "simplex_quadratic".into(), problem: Problem::Plain(o), set: Some(FeasibleSet::Simplex { dim }) }
}

fn with_solved_reference(o: Objective) -> Result<Objective> {
    let x_star = crate::methods::reference_solve(&o, 1e-12)?;
    let f_star = o.value(&x_star)?;
    Ok(o.with_reference(ReferenceSolution { x_star, f_star, provenance: Provenance::HighAccuracySolve(1e-12) }))
}

/// Accelerated proximal gradient to a fixed-point residual of 1e−12, then an exact
/// solve of the optimality conditions restricted to the detected support.
fn solve_composite_reference(c: &CompositeObjective) -> Result<ReferenceSolution> {
    let l = c.smooth.meta.lipschitz_grad_l.ok_or_else(|| LabError::ConfigError("lasso needs L".into()))?;
    let step = 1.0 / l;
    let n = c.dim();
    let mut x = Vector::zeros(n);
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    for _ in 0..200_000 {
        let g = c.smooth.grad(&y)?;
        let xn = c.prox(&(&y - &g * step), step)?;
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &xn + (&xn - &x) * ((t - 1.0) / tn);
        // Restart on non-monotone objective keeps the tail linear.
        if c.value(&xn)? > c.value(&x)? {
            y = xn.clone();
            t = 1.0;
        } else {
            t = tn;
        }
        x = xn;
        if c.optimality_residual(&x, step)? <= 1e-13 {
            break;
        }
    }
    if let (SimplePart::L1 { weight }, ObjectiveKind::LeastSquares { a, b, ridge }) = (c.simple, &c.smooth.kind) {
        let support: Vec<usize> = (0..n).filter(|&i| x[i].abs() > 1e-9).collect();
        if !support.is_empty() {
            let a_s = Matrix::from_fn(a.nrows(), support.len(), |i, j| a[(i, support[j])]);
            let sgn = Vector::from_iterator(support.len(), support.iter().map(|&i| x[i].signum()));
            let lhs = a_s.transpose() * &a_s + Matrix::identity(support.len(), support.len()) * *ridge;
            let rhs = a_s.transpose() * b - sgn * weight;
            if let Ok(xs) = crate::linalg::solve(&lhs, &rhs) {
                let mut cand = Vector::zeros(n);
                for (j, &i) in support.iter().enumerate() {
                    cand[i] = xs[j];
                }
                let same_signs = support.iter().all(|&i| cand[i].signum() == x[i].signum());
                if same_signs && c.optimality_residual(&cand, step)? <= c.optimality_residual(&x, step)?.max(1e-12) {
                    x = cand;
                }
            }
        }
    }
    let res = c.optimality_residual(&x, step)?;
    if res > 1e-8 {
        return Err(LabError::InnerSolverDiverged { iters: 200_000, residual: res });
    }
    let f_star = c.value(&x)?;
    Ok(ReferenceSolution { x_star: x, f_star, provenance: Provenance::HighAccuracySolve(1e-12) })
}
