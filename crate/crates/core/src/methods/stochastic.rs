//! Gradient oracles with optional additive noise.

use crate::problems::Objective;
use crate::{LabError, Result, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Zero-mean additive noise on gradient evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `ξ ~ N(0, s² I)`.
    Gaussian { scale: f64 },
    /// `ξ_i ~ U[−b, b]` independently.
    Bounded { scale: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let s = self.scale();
        if s >= 0.0 && s.is_finite() {
            Ok(())
        } else {
            Err(LabError::ConfigError(format!("noise scale must be nonnegative, got {s}")))
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { scale } | NoiseSpec::Bounded { scale } => scale,
        }
    }

    /// `E‖ξ‖²` in dimension `n`.
    pub fn second_moment(&self, n: usize) -> f64 {
        match *self {
            NoiseSpec::Gaussian { scale } => n as f64 * scale * scale,
            NoiseSpec::Bounded { scale } => n as f64 * scale * scale / 3.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseSpec::Gaussian { .. } => "gaussian",
            NoiseSpec::Bounded { .. } => "bounded",
        }
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng, n: usize) -> Vector {
        match *self {
            NoiseSpec::Gaussian { scale } => {
                Vector::from_iterator(n, (0..n).map(|_| { let v: f64 = StandardNormal.sample(&mut *rng); scale * v }))
            }
            NoiseSpec::Bounded { scale } => Vector::from_iterator(n, (0..n).map(|_| scale * rng.gen_range(-1.0..=1.0))),
        }
    }
}

/// One gradient evaluation: the exact value and the noise added to it, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSample {
    pub exact: Vector,
    pub noise: Option<Vector>,
}

impl GradSample {
    /// The gradient handed to the update.
    pub fn used(&self) -> Vector {
        match &self.noise {
            Some(n) => &self.exact + n,
            None => self.exact.clone(),
        }
    }
}

/// Gradient oracle owned by a single run.
#[derive(Debug, Clone)]
pub struct GradientOracle {
    noise: Option<NoiseSpec>,
    rng: ChaCha8Rng,
}

impl GradientOracle {
    pub fn exact() -> Self {
        GradientOracle { noise: None, rng: crate::linalg::rng(0) }
    }

    pub fn noisy(noise: NoiseSpec, seed: u64) -> Self {
        GradientOracle { noise: Some(noise), rng: crate::linalg::rng(seed) }
    }

    pub fn is_noisy(&self) -> bool {
        self.noise.is_some()
    }

    pub fn eval(&mut self, f: &Objective, x: &Vector) -> Result<GradSample> {
        let exact = f.grad(x)?;
        let noise = match self.noise {
            // A zero scale adds nothing, so results match the exact oracle bit for bit.
            Some(spec) if spec.scale() > 0.0 => Some(spec.draw(&mut self.rng, x.len())),
            _ => None,
        };
        Ok(GradSample { exact, noise })
    }
}
