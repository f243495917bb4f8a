use crate::{LabError, Result};
use serde::{Deserialize, Serialize};

/// Which denominator defines `τ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauConvention {
    /// `τ_k = α_k / A_k`.
    TauOverAk,
    /// `τ_k = α_k / A_{k+1}`.
    TauOverAk1,
}

impl TauConvention {
    pub fn name(&self) -> &'static str {
        match self {
            TauConvention::TauOverAk => "tau_over_Ak",
            TauConvention::TauOverAk1 => "tau_over_Ak1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tau_over_Ak" | "tau_over_ak" => Ok(TauConvention::TauOverAk),
            "tau_over_Ak1" | "tau_over_ak1" => Ok(TauConvention::TauOverAk1),
            _ => Err(LabError::ConfigError(format!("unknown tau convention '{s}'"))),
        }
    }
}

/// Closed-form families of the sequence `A_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `A_k = a0 + εσ·k(k+1)/4`.
    Quadratic { a0: f64, eps_sigma: f64 },
    /// `A_k = a0 + coef·k^degree`.
    Polynomial { a0: f64, coef: f64, degree: f64 },
    /// Constant `τ`: `A_{k+1} = A_k/(1−τ)` or `A_k(1+τ)` depending on the convention.
    Geometric { a0: f64, tau: f64 },
    /// `A_k` chosen so that `τ_k = 2/(k+2)` under `tau_over_Ak`.
    TwoOverKPlus2 { a0: f64 },
    /// `A_k = a0 + c·√k`.
    Sqrt { a0: f64, c: f64 },
    /// `A_k = a0·ratio^k`.
    Exponential { a0: f64, ratio: f64 },
    /// Tabulated values (for re-certification and negative controls).
    Explicit { values: Vec<f64> },
}

/// The sequence `A_k`, time step `δ` and `τ` convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSchedule {
    pub kind: ScheduleKind,
    pub delta: f64,
    pub convention: TauConvention,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::ConfigError(format!("schedule parameter {name} must be positive, got {v}")))
    }
}

impl DiscreteSchedule {
    pub fn new(kind: ScheduleKind, delta: f64, convention: TauConvention) -> Result<Self> {
        positive("delta", delta)?;
        match &kind {
            ScheduleKind::Quadratic { a0, eps_sigma } => {
                positive("a0", *a0)?;
                positive("eps_sigma", *eps_sigma)?;
            }
            ScheduleKind::Polynomial { a0, coef, degree } => {
                positive("a0", *a0)?;
                positive("coef", *coef)?;
                positive("degree", *degree)?;
            }
            ScheduleKind::Geometric { a0, tau } => {
                positive("a0", *a0)?;
                positive("tau", *tau)?;
                if convention == TauConvention::TauOverAk1 && *tau >= 1.0 {
                    return Err(LabError::ConfigError(format!("tau must be < 1 under tau_over_Ak1, got {tau}")));
                }
            }
            ScheduleKind::TwoOverKPlus2 { a0 } => positive("a0", *a0)?,
            ScheduleKind::Sqrt { a0, c } => {
                positive("a0", *a0)?;
                positive("c", *c)?;
            }
            ScheduleKind::Exponential { a0, ratio } => {
                positive("a0", *a0)?;
                if !(*ratio > 1.0 && ratio.is_finite()) {
                    return Err(LabError::ConfigError(format!("ratio must exceed 1, got {ratio}")));
                }
            }
            ScheduleKind::Explicit { values } => {
                if values.is_empty() {
                    return Err(LabError::ConfigError("explicit schedule is empty".into()));
                }
                positive("A_0", values[0])?;
                for w in values.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(LabError::ConfigError(
                            "degenerate schedule: A_k must be strictly increasing (tau_k = 0)".into(),
                        ));
                    }
                }
            }
        }
        Ok(DiscreteSchedule { kind, delta, convention })
    }

    /// `A_k = 1 + εσ·k(k+1)/4`, the largest quadratic meeting `α_k²/A_{k+1} ≤ εσ`.
    pub fn quadratic(eps_sigma: f64, delta: f64) -> Result<Self> {
        Self::new(ScheduleKind::Quadratic { a0: 1.0, eps_sigma }, delta, TauConvention::TauOverAk1)
    }

    /// Degree-`p̃` polynomial with leading coefficient `C^{p̃−1}/p̃^{p̃}`, which keeps
    /// `α_k^{p̃/(p̃−1)}/A_{k+1} ≤ C`.
    pub fn universal(c: f64, p_tilde: f64, delta: f64) -> Result<Self> {
        positive("C", c)?;
        let coef = c.powf(p_tilde - 1.0) / p_tilde.powf(p_tilde);
        Self::new(ScheduleKind::Polynomial { a0: 1.0, coef, degree: p_tilde }, delta, TauConvention::TauOverAk1)
    }

    /// `A_k = 1 + c√k` with `c` minimising `(D + c²G²S_N/2σ)/(c√N)` for the
    /// subgradient bound at horizon `N`, where `S_N = Σ_{i<N}(√(i+1) − √i)²`.
    pub fn sqrt_optimized(d_h: f64, g: f64, sigma: f64, horizon: usize, delta: f64) -> Result<Self> {
        positive("D", d_h)?;
        positive("G", g)?;
        positive("sigma", sigma)?;
        if horizon == 0 {
            return Err(LabError::ConfigError("sqrt_optimized needs a positive horizon".into()));
        }
        let s_n: f64 = (0..horizon).map(|i| ((i + 1) as f64).sqrt() - (i as f64).sqrt()).map(|a| a * a).sum();
        let c = (2.0 * sigma * d_h / (g * g * s_n)).sqrt();
        Self::new(ScheduleKind::Sqrt { a0: 1.0, c }, delta, TauConvention::TauOverAk1)
    }

    pub fn geometric(tau: f64, delta: f64, convention: TauConvention) -> Result<Self> {
        Self::new(ScheduleKind::Geometric { a0: 1.0, tau }, delta, convention)
    }

    /// Maximum horizon for tabulated schedules (`None` when unbounded).
    pub fn horizon(&self) -> Option<usize> {
        match &self.kind {
            ScheduleKind::Explicit { values } => Some(values.len() - 1),
            _ => None,
        }
    }

    pub fn a(&self, k: usize) -> f64 {
        let kf = k as f64;
        match &self.kind {
            ScheduleKind::Quadratic { a0, eps_sigma } => a0 + eps_sigma * kf * (kf + 1.0) / 4.0,
            ScheduleKind::Polynomial { a0, coef, degree } => a0 + coef * kf.powf(*degree),
            ScheduleKind::Geometric { a0, tau } => match self.convention {
                TauConvention::TauOverAk1 => a0 * (1.0 - tau).powf(-kf),
                TauConvention::TauOverAk => a0 * (1.0 + tau).powf(kf),
            },
            ScheduleKind::TwoOverKPlus2 { a0 } => match self.convention {
                TauConvention::TauOverAk => a0 * (kf + 2.0) * (kf + 3.0) / 6.0,
                // With A_0 > 0 the exact match is impossible; this gives τ_k = 2/(k+3).
                TauConvention::TauOverAk1 => a0 * (kf + 1.0) * (kf + 2.0) / 2.0,
            },
            ScheduleKind::Sqrt { a0, c } => a0 + c * kf.sqrt(),
            ScheduleKind::Exponential { a0, ratio } => a0 * ratio.powf(kf),
            ScheduleKind::Explicit { values } => values.get(k).copied().unwrap_or(f64::NAN),
        }
    }

    /// `α_k = A_{k+1} − A_k`.
    pub fn alpha(&self, k: usize) -> f64 {
        match &self.kind {
            ScheduleKind::Quadratic { eps_sigma, .. } => eps_sigma * (k as f64 + 1.0) / 2.0,
            ScheduleKind::TwoOverKPlus2 { a0 } => match self.convention {
                TauConvention::TauOverAk => a0 * (k as f64 + 3.0) / 3.0,
                TauConvention::TauOverAk1 => a0 * (k as f64 + 2.0),
            },
            _ => self.a(k + 1) - self.a(k),
        }
    }

    pub fn tau(&self, k: usize) -> f64 {
        match (&self.kind, self.convention) {
            (ScheduleKind::Geometric { tau, .. }, _) => *tau,
            (_, TauConvention::TauOverAk) => self.alpha(k) / self.a(k),
            (_, TauConvention::TauOverAk1) => self.alpha(k) / self.a(k + 1),
        }
    }

    /// Reject schedules with `τ_k ≤ 0` (or `τ_k > 1` under `tau_over_Ak1`) before step `n`.
    pub fn validate_horizon(&self, n: usize) -> Result<()> {
        if let Some(h) = self.horizon() {
            if n > h {
                return Err(LabError::ConfigError(format!("schedule defined up to k = {h}, {n} steps requested")));
            }
        }
        for k in 0..n {
            let a = self.alpha(k);
            let t = self.tau(k);
            if !(a > 0.0 && a.is_finite() && t > 0.0) {
                return Err(LabError::ConfigError(format!("degenerate schedule at k = {k}: alpha = {a}, tau = {t}")));
            }
            if self.convention == TauConvention::TauOverAk1 && t > 1.0 + 1e-15 {
                return Err(LabError::ConfigError(format!("tau_{k} = {t} exceeds 1")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScheduleKind::Quadratic { .. } => "quadratic",
            ScheduleKind::Polynomial { .. } => "polynomial",
            ScheduleKind::Geometric { .. } => "geometric",
            ScheduleKind::TwoOverKPlus2 { .. } => "two_over_k_plus_2",
            ScheduleKind::Sqrt { .. } => "sqrt",
            ScheduleKind::Exponential { .. } => "exponential",
            ScheduleKind::Explicit { .. } => "explicit",
        }
    }
}

/// Conditions tying the schedule growth to the smoothness constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibilityCondition {
    /// `α_k²/A_{k+1} ≤ εσ`.
    QuadraticGrowth { eps_sigma: f64 },
    /// `α_k^{p̃/(p̃−1)}/A_{k+1} ≤ C`.
    Universal { c: f64, p_tilde: f64 },
    /// `τ_k ≤ √(με)`.
    Strong { sqrt_mu_eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub horizon: usize,
    pub pass: bool,
    pub first_violation: Option<usize>,
    /// Largest observed ratio `lhs / bound`.
    pub max_ratio: f64,
}

/// Scan `k = 0..horizon` for the chosen growth condition.
pub fn schedule_feasibility(s: &DiscreteSchedule, cond: FeasibilityCondition, horizon: usize) -> Result<FeasibilityReport> {
    if horizon < 1 {
        return Err(LabError::ConfigError("horizon must be at least 1".into()));
    }
    let mut first = None;
    let mut max_ratio: f64 = 0.0;
    let rel = 1e-12;
    for k in 0..horizon {
        let (lhs, bound) = match cond {
            FeasibilityCondition::QuadraticGrowth { eps_sigma } => (s.alpha(k).powi(2) / s.a(k + 1), eps_sigma),
            FeasibilityCondition::Universal { c, p_tilde } => {
                (s.alpha(k).powf(p_tilde / (p_tilde - 1.0)) / s.a(k + 1), c)
            }
            FeasibilityCondition::Strong { sqrt_mu_eps } => (s.tau(k), sqrt_mu_eps),
        };
        let ratio = lhs / bound;
        max_ratio = max_ratio.max(ratio);
        if !(lhs <= bound * (1.0 + rel)) && first.is_none() {
            first = Some(k);
        }
    }
    Ok(FeasibilityReport { horizon, pass: first.is_none(), first_violation: first, max_ratio })
}
