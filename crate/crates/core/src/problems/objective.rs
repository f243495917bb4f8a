use crate::linalg::{log_sum_exp, softmax};
use crate::{LabError, Matrix, Result, Vector};
use serde::{Deserialize, Serialize};

/// Smoothness and convexity constants of an objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SmoothnessMeta {
    /// Lipschitz constant of the gradient, `L = 1/ε`.
    pub lipschitz_grad_l: Option<f64>,
    /// Uniform convexity constant μ relative to the problem's intended geometry.
    pub strong_convexity_mu: Option<f64>,
    pub holder: Option<HolderMeta>,
    /// Bound on the norm of every (sub)gradient over the feasible region.
    pub subgradient_bound_g: Option<f64>,
}

/// `‖∇^{p−1} f(x) − ∇^{p−1} f(y)‖ ≤ (1/ε)‖x − y‖^ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderMeta {
    pub epsilon: f64,
    pub nu: f64,
    pub order: u32,
}

impl SmoothnessMeta {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => {
                    Err(LabError::ConfigError(format!("{name} must be positive, got {x}")))
                }
                _ => Ok(()),
            }
        };
        pos("L", self.lipschitz_grad_l)?;
        pos("mu", self.strong_convexity_mu)?;
        pos("G", self.subgradient_bound_g)?;
        if let Some(h) = self.holder {
            pos("holder epsilon", Some(h.epsilon))?;
            if !(h.nu > 0.0 && h.nu <= 1.0) {
                return Err(LabError::ConfigError(format!("holder nu must lie in (0,1], got {}", h.nu)));
            }
            if h.order < 2 {
                return Err(LabError::ConfigError("holder order must be >= 2".into()));
            }
        }
        if let (Some(l), Some(m)) = (self.lipschitz_grad_l, self.strong_convexity_mu) {
            if m > l * (1.0 + 1e-12) {
                return Err(LabError::ConfigError(format!("mu = {m} exceeds L = {l}")));
            }
        }
        Ok(())
    }

    /// `ε = 1/L` when declared.
    pub fn epsilon(&self) -> Option<f64> {
        self.lipschitz_grad_l.map(|l| 1.0 / l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tolerance", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    HighAccuracySolve(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vector,
    pub f_star: f64,
    pub provenance: Provenance,
}

/// The supported function families. Each variant carries its data.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// `½(x − c)ᵀQ(x − c) + f0`, stored centred so gaps are computed without cancellation.
    Quadratic { q: Matrix, center: Vector, offset: f64 },
    /// `ln Σ exp(a_iᵀx − b_i) + (λ/2)‖x‖²`.
    LogSumExp { a: Matrix, b: Vector, lambda: f64 },
    /// `½‖Ax − b‖² + (ridge/2)‖x‖²`.
    LeastSquares { a: Matrix, b: Vector, ridge: f64 },
    /// `w‖x − c‖₁`, subgradient `w·sign(x − c)` with `sign(0) = 0`.
    L1 { center: Vector, weight: f64 },
    /// `w‖x − c‖₁ + (μ/2)‖x‖²`.
    L1Ridge { center: Vector, weight: f64, mu: f64 },
    /// `(1/m) Σ ln(1 + exp(−y_i a_iᵀx)) + (λ/2)‖x‖²`.
    Logistic { a: Matrix, labels: Vector, lambda: f64 },
    /// `½xᵀQx + (c/4) Σ x_i⁴`.
    QuadPlusQuartic { q: Matrix, quartic: f64 },
    /// `w Σ |x_i − c_i|^{1+ν} / (1+ν)`.
    HolderPower { center: Vector, nu: f64, weight: f64 },
    /// `μ Σ x_i ln(x_i / c_i)` on the simplex, μ-uniformly convex relative to the entropy.
    RelativeEntropy { center: Vector, mu: f64 },
    /// Sum of two objectives.
    Sum(Box<Objective>, Box<Objective>),
}

/// An objective oracle bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub id: String,
    pub dim: usize,
    pub kind: ObjectiveKind,
    pub meta: SmoothnessMeta,
    pub reference: Option<ReferenceSolution>,
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Objective {
    pub fn new(id: impl Into<String>, dim: usize, kind: ObjectiveKind, meta: SmoothnessMeta) -> Self {
        Objective { id: id.into(), dim, kind, meta, reference: None }
    }

    pub fn with_reference(mut self, r: ReferenceSolution) -> Self {
        self.reference = Some(r);
        self
    }

    fn check(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim {
            return Err(LabError::DomainViolation(format!(
                "point has dimension {}, objective {} has {}",
                x.len(),
                self.id,
                self.dim
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.check(x)?;
        Ok(match &self.kind {
            ObjectiveKind::Quadratic { q, center, offset } => {
                let d = x - center;
                0.5 * d.dot(&(q * &d)) + offset
            }
            ObjectiveKind::LogSumExp { a, b, lambda } => {
                log_sum_exp(&(a * x - b)) + 0.5 * lambda * x.norm_squared()
            }
            ObjectiveKind::LeastSquares { a, b, ridge } => {
                0.5 * (a * x - b).norm_squared() + 0.5 * ridge * x.norm_squared()
            }
            ObjectiveKind::L1 { center, weight } => weight * (x - center).lp_norm(1),
            ObjectiveKind::L1Ridge { center, weight, mu } => {
                weight * (x - center).lp_norm(1) + 0.5 * mu * x.norm_squared()
            }
            ObjectiveKind::Logistic { a, labels, lambda } => {
                let m = a.nrows() as f64;
                let margins = a * x;
                let loss: f64 = margins.iter().zip(labels.iter()).map(|(t, y)| softplus(-y * t)).sum();
                loss / m + 0.5 * lambda * x.norm_squared()
            }
            ObjectiveKind::QuadPlusQuartic { q, quartic } => {
                0.5 * x.dot(&(q * x)) + 0.25 * quartic * x.iter().map(|v| v.powi(4)).sum::<f64>()
            }
            ObjectiveKind::HolderPower { center, nu, weight } => {
                weight * (x - center).iter().map(|u| u.abs().powf(1.0 + nu)).sum::<f64>() / (1.0 + nu)
            }
            ObjectiveKind::RelativeEntropy { center, mu } => {
                if x.iter().any(|&v| v < 0.0) {
                    return Err(LabError::DomainViolation("relative entropy needs x >= 0".into()));
                }
                mu * x
                    .iter()
                    .zip(center.iter())
                    .map(|(&v, &c)| if v > 0.0 { v * (v / c).ln() } else { 0.0 })
                    .sum::<f64>()
            }
            ObjectiveKind::Sum(f, g) => f.value(x)? + g.value(x)?,
        })
    }

    /// Gradient, or the deterministic subgradient selector for nonsmooth kinds.
    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        self.check(x)?;
        Ok(match &self.kind {
            ObjectiveKind::Quadratic { q, center, .. } => q * (x - center),
            ObjectiveKind::LogSumExp { a, b, lambda } => {
                a.transpose() * softmax(&(a * x - b)) + x * *lambda
            }
            ObjectiveKind::LeastSquares { a, b, ridge } => a.transpose() * (a * x - b) + x * *ridge,
            ObjectiveKind::L1 { center, weight } => (x - center).map(|u| weight * sign0(u)),
            ObjectiveKind::L1Ridge { center, weight, mu } => {
                (x - center).map(|u| weight * sign0(u)) + x * *mu
            }
            ObjectiveKind::Logistic { a, labels, lambda } => {
                let m = a.nrows() as f64;
                let margins = a * x;
                let w = Vector::from_iterator(
                    margins.len(),
                    margins.iter().zip(labels.iter()).map(|(t, y)| -y * sigmoid(-y * t) / m),
                );
                a.transpose() * w + x * *lambda
            }
            ObjectiveKind::QuadPlusQuartic { q, quartic } => q * x + x.map(|v| quartic * v.powi(3)),
            ObjectiveKind::HolderPower { center, nu, weight } => {
                (x - center).map(|u| weight * sign0(u) * u.abs().powf(*nu))
            }
            ObjectiveKind::RelativeEntropy { center, mu } => {
                if let Some(i) = x.iter().position(|&v| v <= crate::geometry::ENTROPY_FLOOR) {
                    return Err(LabError::SingularPoint(format!("relative entropy gradient at coordinate {i}")));
                }
                Vector::from_iterator(
                    x.len(),
                    x.iter().zip(center.iter()).map(|(&v, &c)| mu * (1.0 + (v / c).ln())),
                )
            }
            ObjectiveKind::Sum(f, g) => f.grad(x)? + g.grad(x)?,
        })
    }

    /// Dense Hessian. Nonsmooth kinds report the Hessian of their smooth pieces.
    pub fn hessian(&self, x: &Vector) -> Result<Matrix> {
        self.check(x)?;
        let n = self.dim;
        Ok(match &self.kind {
            ObjectiveKind::Quadratic { q, .. } => q.clone(),
            ObjectiveKind::LogSumExp { a, b, lambda } => {
                let p = softmax(&(a * x - b));
                let s = Matrix::from_diagonal(&p) - &p * p.transpose();
                a.transpose() * s * a + Matrix::identity(n, n) * *lambda
            }
            ObjectiveKind::LeastSquares { a, ridge, .. } => {
                a.transpose() * a + Matrix::identity(n, n) * *ridge
            }
            ObjectiveKind::L1 { .. } => Matrix::zeros(n, n),
            ObjectiveKind::L1Ridge { mu, .. } => Matrix::identity(n, n) * *mu,
            ObjectiveKind::Logistic { a, labels, lambda } => {
                let m = a.nrows() as f64;
                let margins = a * x;
                let w = Vector::from_iterator(
                    margins.len(),
                    margins.iter().zip(labels.iter()).map(|(t, y)| {
                        let s = sigmoid(-y * t);
                        s * (1.0 - s) / m
                    }),
                );
                a.transpose() * Matrix::from_diagonal(&w) * a + Matrix::identity(n, n) * *lambda
            }
            ObjectiveKind::QuadPlusQuartic { q, quartic } => {
                q + Matrix::from_diagonal(&x.map(|v| 3.0 * quartic * v * v))
            }
            ObjectiveKind::HolderPower { center, nu, weight } => {
                let d = x - center;
                if d.iter().any(|&u| u == 0.0) && *nu < 1.0 {
                    return Err(LabError::NonsmoothPoint("Hölder power Hessian at its center".into()));
                }
                Matrix::from_diagonal(&d.map(|u| weight * nu * u.abs().powf(nu - 1.0)))
            }
            ObjectiveKind::RelativeEntropy { mu, .. } => Matrix::from_diagonal(&x.map(|v| mu / v)),
            ObjectiveKind::Sum(f, g) => f.hessian(x)? + g.hessian(x)?,
        })
    }

    pub fn hessian_vec(&self, x: &Vector, v: &Vector) -> Result<Vector> {
        Ok(self.hessian(x)? * v)
    }

    /// Whether the selector at `x` sits on a kink of a nonsmooth piece.
    pub fn is_nonsmooth_at(&self, x: &Vector) -> bool {
        match &self.kind {
            ObjectiveKind::L1 { center, .. } | ObjectiveKind::L1Ridge { center, .. } => {
                x.iter().zip(center.iter()).any(|(a, c)| (a - c).abs() < 1e-12)
            }
            ObjectiveKind::Sum(f, g) => f.is_nonsmooth_at(x) || g.is_nonsmooth_at(x),
            _ => false,
        }
    }

    pub fn is_nonsmooth(&self) -> bool {
        match &self.kind {
            ObjectiveKind::L1 { .. } | ObjectiveKind::L1Ridge { .. } => true,
            ObjectiveKind::Sum(f, g) => f.is_nonsmooth() || g.is_nonsmooth(),
            _ => false,
        }
    }

    /// Whether a Hessian oracle is meaningful (needed by second-order maps).
    pub fn has_hessian(&self) -> bool {
        !self.is_nonsmooth()
    }

    /// `f(x) − f*` against the stored reference.
    pub fn gap(&self, x: &Vector) -> Result<f64> {
        let r = self
            .reference
            .as_ref()
            .ok_or_else(|| LabError::MissingTraceField(format!("{} has no reference solution", self.id)))?;
        if let ObjectiveKind::Quadratic { q, center, offset } = &self.kind {
            self.check(x)?;
            let d = x - center;
            return Ok(0.5 * d.dot(&(q * &d)) + (offset - r.f_star));
        }
        Ok(self.value(x)? - r.f_star)
    }

    pub fn reference(&self) -> Result<&ReferenceSolution> {
        self.reference
            .as_ref()
            .ok_or_else(|| LabError::MissingTraceField(format!("{} has no reference solution", self.id)))
    }
}
