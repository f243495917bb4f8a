//! Continuous-time scaling schedules `(α_t, β_t, γ_t)`.

use crate::{LabError, Result};
use serde::Serialize;

/// Monotone reparameterisation `t ↦ τ(t)` used for time dilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeMap {
    Identity,
    /// `τ(t) = c·t`.
    Scale { c: f64 },
    /// `τ(t) = t^p`.
    Power { p: f64 },
}

impl TimeMap {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TimeMap::Identity => Ok(()),
            TimeMap::Scale { c } if c > 0.0 && c.is_finite() => Ok(()),
            TimeMap::Power { p } if p > 0.0 && p.is_finite() => Ok(()),
            _ => Err(LabError::ConfigError(format!("time map {self:?} is not increasing"))),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeMap::Identity => t,
            TimeMap::Scale { c } => c * t,
            TimeMap::Power { p } => t.powf(p),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            TimeMap::Identity => 1.0,
            TimeMap::Scale { c } => c,
            TimeMap::Power { p } => p * t.powf(p - 1.0),
        }
    }

    pub fn inverse(&self, s: f64) -> f64 {
        match *self {
            TimeMap::Identity => s,
            TimeMap::Scale { c } => s / c,
            TimeMap::Power { p } => s.powf(1.0 / p),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            TimeMap::Identity => "identity".into(),
            TimeMap::Scale { c } => format!("scale({c})"),
            TimeMap::Power { p } => format!("power({p})"),
        }
    }
}

/// The function `β_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSpec {
    /// `β_t = p ln t + ln c`, so `e^{β_t} = c·t^p`.
    Polynomial { p: f64, c: f64 },
    /// `β_t = γ t`.
    Linear { gamma: f64 },
    /// `β̃_t = β_{τ(t)}`.
    Dilated { base: Box<BetaSpec>, tau: TimeMap },
}

impl BetaSpec {
    fn value(&self, t: f64) -> f64 {
        match self {
            BetaSpec::Polynomial { p, c } => p * t.ln() + c.ln(),
            BetaSpec::Linear { gamma } => gamma * t,
            BetaSpec::Dilated { base, tau } => base.value(tau.eval(t)),
        }
    }

    fn deriv(&self, t: f64) -> f64 {
        match self {
            BetaSpec::Polynomial { p, .. } => p / t,
            BetaSpec::Linear { gamma } => *gamma,
            BetaSpec::Dilated { base, tau } => base.deriv(tau.eval(t)) * tau.deriv(t),
        }
    }

    fn singular_at_zero(&self) -> bool {
        match self {
            BetaSpec::Polynomial { .. } => true,
            BetaSpec::Linear { .. } => false,
            BetaSpec::Dilated { base, .. } => base.singular_at_zero(),
        }
    }

    fn name(&self) -> String {
        match self {
            BetaSpec::Polynomial { p, c } if *c == 1.0 => format!("polynomial(p={p})"),
            BetaSpec::Polynomial { p, c } => format!("polynomial(p={p},c={c})"),
            BetaSpec::Linear { gamma } => format!("linear(gamma={gamma})"),
            BetaSpec::Dilated { base, tau } => format!("{}∘{}", base.name(), tau.name()),
        }
    }
}

/// A schedule specified by `β` alone. With the ideal-scaling equality on,
/// `α_t = ln β̇_t`; otherwise `α_t = ln β̇_t + alpha_shift`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousSchedule {
    pub beta: BetaSpec,
    pub ideal_scaling_equality: bool,
    pub alpha_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub samples: usize,
    /// Largest `β̇_t − e^{α_t}`; nonpositive when the inequality holds.
    pub max_excess: f64,
    pub pass: bool,
}

impl ContinuousSchedule {
    pub fn polynomial(p: f64) -> Self {
        Self::polynomial_scaled(p, 1.0)
    }

    pub fn polynomial_scaled(p: f64, c: f64) -> Self {
        ContinuousSchedule { beta: BetaSpec::Polynomial { p, c }, ideal_scaling_equality: true, alpha_shift: 0.0 }
    }

    pub fn linear(gamma: f64) -> Self {
        ContinuousSchedule { beta: BetaSpec::Linear { gamma }, ideal_scaling_equality: true, alpha_shift: 0.0 }
    }

    /// The same schedule seen through `τ`: `β̃_t = β_{τ(t)}`.
    pub fn dilated(&self, tau: TimeMap) -> Self {
        ContinuousSchedule {
            beta: BetaSpec::Dilated { base: Box::new(self.beta.clone()), tau },
            ideal_scaling_equality: self.ideal_scaling_equality,
            alpha_shift: self.alpha_shift,
        }
    }

    /// Leave equality mode with `α_t = ln β̇_t + shift`.
    pub fn with_alpha_shift(mut self, shift: f64) -> Self {
        self.alpha_shift = shift;
        self.ideal_scaling_equality = shift == 0.0;
        self
    }

    pub fn validate(&self, t0: f64) -> Result<()> {
        if self.beta.singular_at_zero() && t0 <= 0.0 {
            return Err(LabError::ConfigError(format!("polynomial schedules need t0 > 0, got {t0}")));
        }
        match &self.beta {
            BetaSpec::Polynomial { p, c } if !(*p > 0.0 && *c > 0.0) => {
                Err(LabError::ConfigError(format!("polynomial schedule needs p > 0 and c > 0, got p = {p}, c = {c}")))
            }
            BetaSpec::Linear { gamma } if !(*gamma > 0.0) => {
                Err(LabError::ConfigError(format!("linear schedule needs gamma > 0, got {gamma}")))
            }
            BetaSpec::Dilated { tau, .. } => tau.validate(),
            _ if !self.alpha_shift.is_finite() => Err(LabError::ConfigError("alpha_shift must be finite".into())),
            _ => Ok(()),
        }
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.beta.value(t)
    }

    pub fn beta_dot(&self, t: f64) -> f64 {
        self.beta.deriv(t)
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.beta_dot(t).ln() + self.alpha_shift
    }

    /// `e^{α_t}`.
    pub fn e_alpha(&self, t: f64) -> f64 {
        self.beta_dot(t) * self.alpha_shift.exp()
    }

    /// `γ_t` normalised to `γ_{t0} = 0`; `γ̇_t = e^{α_t}` holds exactly.
    pub fn gamma(&self, t: f64, t0: f64) -> f64 {
        self.alpha_shift.exp() * (self.beta(t) - self.beta(t0))
    }

    /// `β̇_t ≤ e^{α_t}` at `n` evenly spaced times in `[t0, t1]`.
    pub fn ideal_scaling_report(&self, t0: f64, t1: f64, n: usize) -> ScalingReport {
        let n = n.max(2);
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
            let b = self.beta_dot(t);
            let ea = self.alpha(t).exp();
            worst = worst.max(b - ea - 1e-12 * b.abs());
        }
        ScalingReport { samples: n, max_excess: worst, pass: worst <= 0.0 }
    }

    pub fn name(&self) -> String {
        if self.ideal_scaling_equality {
            self.beta.name()
        } else {
            format!("{}+alpha_shift({})", self.beta.name(), self.alpha_shift)
        }
    }

    /// `Some(γ)` for `β_t = γt` without dilation.
    pub fn linear_gamma(&self) -> Option<f64> {
        match self.beta {
            BetaSpec::Linear { gamma } if self.ideal_scaling_equality => Some(gamma),
            _ => None,
        }
    }
}
