use crate::problems::Objective;
use crate::{LabError, Result, Vector};
use serde::{Deserialize, Serialize};

/// The map producing `y_{k+1}` in the accelerated families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientMapSpec {
    /// `G(x) = x_{k+1}` (quasi-monotone method).
    IdentityXk1,
    /// `G(x) = x − ε∇f(x)`.
    Nesterov { eps: f64 },
    /// `G(x) = τ_k z_{k+1} + (1−τ_k) y_k`.
    TsengCoupled,
    /// Minimiser of the order-`(p−1)` Taylor model plus `(N/(ε p̃))‖y−x‖^{p̃}`, `p̃ = p−1+ν`.
    UniversalHigher { eps: f64, p: u32, nu: f64, n: f64, tol: f64 },
    /// `G(x) = x − ε̃∇f(x)` for Hölder-continuous gradients, accurate to `δ̃`.
    UniversalNu { eps_tilde: f64, delta_tilde: f64 },
}

impl GradientMapSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(LabError::ConfigError(format!("gradient map parameter {name} must be positive, got {v}")))
            }
        };
        match *self {
            GradientMapSpec::Nesterov { eps } => pos("eps", eps),
            GradientMapSpec::UniversalHigher { eps, p, nu, n, tol } => {
                pos("eps", eps)?;
                pos("tol", tol)?;
                if !(n > 1.0) {
                    return Err(LabError::ConfigError(format!("universal_higher needs N > 1, got {n}")));
                }
                if !(nu > 0.0 && nu <= 1.0) {
                    return Err(LabError::ConfigError(format!("nu must lie in (0,1], got {nu}")));
                }
                if p != 2 && p != 3 {
                    return Err(LabError::ConfigError(format!("universal_higher supports p in {{2, 3}}, got {p}")));
                }
                Ok(())
            }
            GradientMapSpec::UniversalNu { eps_tilde, delta_tilde } => {
                pos("eps_tilde", eps_tilde)?;
                pos("delta_tilde", delta_tilde)
            }
            _ => Ok(()),
        }
    }

    /// `ε̃` meeting `1/ε̃ ≥ (1/2δ̃)^{(1−ν)/(1+ν)} (1/ε)^{2/(1+ν)}` with equality.
    pub fn universal_nu_auto(eps: f64, nu: f64, delta_tilde: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(LabError::ConfigError(format!("nu must lie in (0,1], got {nu}")));
        }
        let inv = (1.0 / (2.0 * delta_tilde)).powf((1.0 - nu) / (1.0 + nu)) * (1.0 / eps).powf(2.0 / (1.0 + nu));
        let g = GradientMapSpec::UniversalNu { eps_tilde: 1.0 / inv, delta_tilde };
        g.validate()?;
        Ok(g)
    }

    pub fn name(&self) -> &'static str {
        match self {
            GradientMapSpec::IdentityXk1 => "identity_xk1",
            GradientMapSpec::Nesterov { .. } => "nesterov",
            GradientMapSpec::TsengCoupled => "tseng_coupled",
            GradientMapSpec::UniversalHigher { .. } => "universal_higher",
            GradientMapSpec::UniversalNu { .. } => "universal_nu",
        }
    }

    /// `p̃ = p − 1 + ν` for the universal map.
    pub fn p_tilde(&self) -> Option<f64> {
        match *self {
            GradientMapSpec::UniversalHigher { p, nu, .. } => Some(p as f64 - 1.0 + nu),
            _ => None,
        }
    }

    /// Progress constant `(N²−1)^{(p̃−1)/(2p̃−2)}/(2N)` of the universal map.
    pub fn progress_coefficient(&self) -> Option<f64> {
        match *self {
            GradientMapSpec::UniversalHigher { n, .. } => {
                let pt = self.p_tilde()?;
                Some((n * n - 1.0).powf((pt - 1.0) / (2.0 * pt - 2.0)) / (2.0 * n))
            }
            _ => None,
        }
    }

    /// Largest `C` in `α_k^{p̃/(p̃−1)}/A_{k+1} ≤ C` for which the conservative progress
    /// bound cancels the gradient error term under a `σ`-uniformly convex `h` of order `p̃`.
    pub fn universal_schedule_constant(&self, sigma: f64) -> Option<f64> {
        match *self {
            GradientMapSpec::UniversalHigher { eps, .. } => {
                let pt = self.p_tilde()?;
                let coef = self.progress_coefficient_conservative()?;
                Some(coef * (eps * sigma).powf(1.0 / (pt - 1.0)) * pt / (pt - 1.0))
            }
            _ => None,
        }
    }

    /// The smaller constant `(N²−1)^{(p̃−2)/(2p̃−2)}/(2N)` produced by the
    /// explicit minimisation over `r = ‖y − x‖`.
    pub fn progress_coefficient_conservative(&self) -> Option<f64> {
        match *self {
            GradientMapSpec::UniversalHigher { n, .. } => {
                let pt = self.p_tilde()?;
                Some((n * n - 1.0).powf((pt - 2.0) / (2.0 * pt - 2.0)) / (2.0 * n))
            }
            _ => None,
        }
    }
}

/// Result of one map application.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    pub y: Vector,
    /// Stationarity residual of the subproblem (zero for closed forms).
    pub residual: f64,
}

/// Apply a point-only map (`nesterov`, `universal_nu`, `universal_higher`) at `x` with gradient `g`.
pub fn apply_gradient_map(gmap: &GradientMapSpec, f: &Objective, x: &Vector, g: &Vector) -> Result<MapOutput> {
    match *gmap {
        GradientMapSpec::Nesterov { eps } => Ok(MapOutput { y: x - g * eps, residual: 0.0 }),
        GradientMapSpec::UniversalNu { eps_tilde, .. } => Ok(MapOutput { y: x - g * eps_tilde, residual: 0.0 }),
        GradientMapSpec::IdentityXk1 => Ok(MapOutput { y: x.clone(), residual: 0.0 }),
        GradientMapSpec::UniversalHigher { eps, p, nu, n, tol } => universal_higher(f, x, g, eps, p, nu, n, tol),
        GradientMapSpec::TsengCoupled => Err(LabError::IncompatibleConfiguration(
            "tseng_coupled needs z_{k+1} and y_k; it is applied inside the stepper".into(),
        )),
    }
}

/// Regularised Taylor step. For `p = 3` the minimiser solves
/// `(H + λ(r) I) s = −g` with `λ(r) = (N/ε) r^{p̃−2}` and `‖s‖ = r`; the scalar
/// equation in `r` is solved by bisection on the eigen-decomposition of `H`
/// followed by Newton polishing.
#[allow(clippy::too_many_arguments)]
fn universal_higher(f: &Objective, x: &Vector, g: &Vector, eps: f64, p: u32, nu: f64, n: f64, tol: f64) -> Result<MapOutput> {
    let pt = p as f64 - 1.0 + nu;
    let gn = g.norm();
    if gn == 0.0 {
        return Ok(MapOutput { y: x.clone(), residual: 0.0 });
    }
    let reg = n / eps;
    if p == 2 {
        // Linear model: g = (N/ε) r^{p̃−1} along −g.
        let r = (gn / reg).powf(1.0 / (pt - 1.0));
        return Ok(MapOutput { y: x - g * (r / gn), residual: 0.0 });
    }
    if !f.has_hessian() {
        return Err(LabError::SubproblemNotSolved(format!("{} has no Hessian oracle", f.id)));
    }
    let hm = f.hessian(x)?;
    let hm = (&hm + hm.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(hm.clone());
    let lmin = eig.eigenvalues.min();
    let scale = eig.eigenvalues.amax().max(1.0);
    if lmin < -1e-10 * scale {
        return Err(LabError::SubproblemNotSolved(format!("Hessian has negative eigenvalue {lmin}")));
    }
    let lam: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let c = eig.eigenvectors.transpose() * g;
    let lambda = |r: f64| reg * r.powf(pt - 2.0);
    let snorm = |r: f64| -> f64 {
        let l = lambda(r);
        lam.iter().zip(c.iter()).map(|(&li, &ci)| (ci / (li + l)).powi(2)).sum::<f64>().sqrt()
    };
    // φ(r) = ‖s(r)‖ − r is decreasing; bracket the root.
    let mut hi = (gn / reg).powf(1.0 / (pt - 1.0));
    while snorm(hi) > hi {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if snorm(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let l = lambda(r);
    let s = -(&eig.eigenvectors * Vector::from_iterator(lam.len(), lam.iter().zip(c.iter()).map(|(&li, &ci)| ci / (li + l))));
    let sn = s.norm();
    let stat = g + &hm * &s + &s * (reg * sn.powf(pt - 2.0));
    let residual = stat.norm() / gn.max(1.0);
    if !(residual <= tol) {
        return Err(LabError::SubproblemNotSolved(format!(
            "regularised Taylor step: stationarity residual {residual:e} above {tol:e}"
        )));
    }
    Ok(MapOutput { y: x + s, residual })
}
