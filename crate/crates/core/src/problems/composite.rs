use super::objective::{Objective, ReferenceSolution};
use crate::{LabError, Result, Vector};
use serde::{Deserialize, Serialize};

/// The simple part ψ of `f = φ + ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimplePart {
    None,
    /// `w‖x‖₁`.
    L1 { weight: f64 },
    /// Indicator of `[lo, hi]^n`.
    IndicatorBox { lo: f64, hi: f64 },
    /// `w Σ huber_c(x_i)`, the smoothed absolute value with width `c`.
    Huber { weight: f64, width: f64 },
    /// `(w/2)‖x‖²`.
    SquaredNorm { weight: f64 },
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

impl SimplePart {
    pub fn value(&self, x: &Vector) -> f64 {
        match *self {
            SimplePart::None => 0.0,
            SimplePart::L1 { weight } => weight * x.lp_norm(1),
            SimplePart::IndicatorBox { lo, hi } => {
                let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
                if x.iter().all(|&v| v >= lo - tol && v <= hi + tol) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            SimplePart::Huber { weight, width } => {
                weight
                    * x.iter()
                        .map(|&u| if u.abs() <= width { u * u / (2.0 * width) } else { u.abs() - width / 2.0 })
                        .sum::<f64>()
            }
            SimplePart::SquaredNorm { weight } => 0.5 * weight * x.norm_squared(),
        }
    }

    /// Exact minimiser of `ψ(z) + (1/(2·step))‖z − x‖²`.
    pub fn prox(&self, x: &Vector, step: f64) -> Result<Vector> {
        if !(step > 0.0) {
            return Err(LabError::DomainViolation(format!("prox step must be positive, got {step}")));
        }
        Ok(match *self {
            SimplePart::None => x.clone(),
            SimplePart::L1 { weight } => {
                let t = weight * step;
                x.map(|v| sign0(v) * (v.abs() - t).max(0.0))
            }
            SimplePart::IndicatorBox { lo, hi } => x.map(|v| v.clamp(lo, hi)),
            SimplePart::Huber { weight, width } => {
                let t = weight * step;
                x.map(|v| if v.abs() <= width + t { v / (1.0 + t / width) } else { v - t * sign0(v) })
            }
            SimplePart::SquaredNorm { weight } => x / (1.0 + weight * step),
        })
    }

    /// Deterministic (sub)gradient selector; zero for the box indicator inside the box.
    pub fn grad(&self, x: &Vector) -> Vector {
        match *self {
            SimplePart::None | SimplePart::IndicatorBox { .. } => Vector::zeros(x.len()),
            SimplePart::L1 { weight } => x.map(|v| weight * sign0(v)),
            SimplePart::Huber { weight, width } => {
                x.map(|u| if u.abs() <= width { weight * u / width } else { weight * sign0(u) })
            }
            SimplePart::SquaredNorm { weight } => x * weight,
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, SimplePart::None | SimplePart::Huber { .. } | SimplePart::SquaredNorm { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimplePart::None => "none",
            SimplePart::L1 { .. } => "l1",
            SimplePart::IndicatorBox { .. } => "indicator_box",
            SimplePart::Huber { .. } => "huber",
            SimplePart::SquaredNorm { .. } => "squared_norm",
        }
    }
}

/// `f = φ + ψ` with a smooth part carrying the metadata and a simple part with a closed-form prox.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeObjective {
    pub smooth: Objective,
    pub simple: SimplePart,
    pub reference: Option<ReferenceSolution>,
}

impl CompositeObjective {
    pub fn new(smooth: Objective, simple: SimplePart) -> Self {
        CompositeObjective { smooth, simple, reference: None }
    }

    pub fn with_reference(mut self, r: ReferenceSolution) -> Self {
        self.reference = Some(r);
        self
    }

    pub fn id(&self) -> &str {
        &self.smooth.id
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        Ok(self.smooth.value(x)? + self.simple.value(x))
    }

    pub fn prox(&self, x: &Vector, step: f64) -> Result<Vector> {
        self.simple.prox(x, step)
    }

    pub fn smooth_grad(&self, x: &Vector) -> Result<Vector> {
        self.smooth.grad(x)
    }

    pub fn reference(&self) -> Result<&ReferenceSolution> {
        self.reference
            .as_ref()
            .ok_or_else(|| LabError::MissingTraceField(format!("{} has no reference solution", self.id())))
    }

    pub fn gap(&self, x: &Vector) -> Result<f64> {
        Ok(self.value(x)? - self.reference()?.f_star)
    }

    /// Prox-gradient fixed-point residual `‖x − prox_{sψ}(x − s∇φ(x))‖ / s`.
    pub fn optimality_residual(&self, x: &Vector, step: f64) -> Result<f64> {
        let g = self.smooth.grad(x)?;
        let p = self.prox(&(x - &g * step), step)?;
        Ok((x - p).norm() / step)
    }
}
