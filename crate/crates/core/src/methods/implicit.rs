//! Coupled solves for the implicit methods and the reference-solution solver.

use crate::geometry::{DistanceGenerator, DualPoint, GeneratorKind, GeometryDomain};
use crate::problems::Objective;
use crate::{LabError, Matrix, Result, Vector};

pub const MAX_INNER_ITERS: usize = 200;
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Outcome of a coupled solve: the new `x`, `z` with canonical dual, and the relative residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitSolution {
    pub x: Vector,
    pub z: Vector,
    pub z_dual: DualPoint,
    pub residual: f64,
    pub iterations: usize,
}

fn relative(r: &Vector, x: &Vector) -> f64 {
    r.norm() / (1.0 + x.norm())
}

fn check_supported(h: &DistanceGenerator) -> Result<()> {
    if let GeometryDomain::Box { .. } = h.domain {
        return Err(LabError::IncompatibleConfiguration(
            "implicit methods need a differentiable mirror map; box geometries are not supported".into(),
        ));
    }
    Ok(())
}

fn admissible(h: &DistanceGenerator, x: &Vector) -> bool {
    x.iter().all(|v| v.is_finite())
        && match h.kind {
            GeneratorKind::NegativeEntropy => x.iter().all(|&v| v > 0.0),
            _ => true,
        }
}

/// Damped Newton on `r(x) = 0` with a residual line search.
fn newton<F>(h: &DistanceGenerator, x0: &Vector, mut eval: F) -> Result<(Vector, f64, usize)>
where
    F: FnMut(&Vector) -> Result<(Vector, Matrix)>,
{
    let mut x = x0.clone();
    let (mut r, mut jac) = eval(&x)?;
    let mut res = relative(&r, &x);
    let mut iters = 0;
    while iters < MAX_INNER_ITERS && res > 1e-15 {
        iters += 1;
        let step = crate::linalg::solve(&jac, &r)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &x - &step * t;
            if admissible(h, &cand) {
                if let Ok((rc, jc)) = eval(&cand) {
                    let rr = relative(&rc, &cand);
                    if rr < res || (rr <= 1e-15) {
                        x = cand;
                        r = rc;
                        jac = jc;
                        res = rr;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // Rounding in `∇f` is amplified by the step weight, so a stalled search is
    // accepted at the attainable accuracy `u·cond(J)`.
    let cond = 1.0 + (&jac - Matrix::identity(jac.nrows(), jac.ncols())).norm();
    let attainable = 1e3 * f64::EPSILON * cond;
    if !(res <= RESIDUAL_TOL.max(attainable)) {
        return Err(LabError::InnerSolverDiverged { iters, residual: res });
    }
    Ok((x, res, iters))
}

/// Solve `x = (τ z + x_k)/(1+τ)` with `∇h(z) = ∇h(z_k) − α∇f(x)`.
pub fn solve_implicit_weak(
    f: &Objective,
    h: &DistanceGenerator,
    x_k: &Vector,
    z_dual: &DualPoint,
    alpha: f64,
    tau: f64,
) -> Result<ImplicitSolution> {
    check_supported(h)?;
    let w = tau / (1.0 + tau);
    let n = x_k.len();
    let eval = |x: &Vector| -> Result<(Vector, Matrix)> {
        let g = f.grad(x)?;
        let theta = DualPoint::new(&z_dual.coords - g * alpha);
        let z = h.mirror_inverse(&theta)?;
        let r = x - (&z * tau + x_k) / (1.0 + tau);
        let jstar = h.mirror_inverse_jacobian(&theta)?;
        let jac = Matrix::identity(n, n) + jstar * f.hessian(x)? * (w * alpha);
        Ok((r, jac))
    };
    let (x, res, iters) = newton(h, x_k, eval)?;
    let g = f.grad(&x)?;
    let (z, z_dual_new) = h.from_dual(&z_dual.coords - g * alpha)?;
    let coupling = relative(&(&x - (&z * tau + x_k) / (1.0 + tau)), &x);
    Ok(ImplicitSolution { x, z, z_dual: z_dual_new, residual: res.max(coupling), iterations: iters })
}

/// Solve `x = (τ z + x_k)/(1+τ)` with
/// `(1+τ)∇h(z) = ∇h(z_k) + τ∇h(x) − (τ/μ)∇f(x)`.
pub fn solve_implicit_strong(
    f: &Objective,
    h: &DistanceGenerator,
    mu: f64,
    x_k: &Vector,
    z_dual: &DualPoint,
    tau: f64,
) -> Result<ImplicitSolution> {
    check_supported(h)?;
    let n = x_k.len();
    let w = tau / (1.0 + tau);
    let theta_of = |x: &Vector| -> Result<Vector> {
        let g = f.grad(x)?;
        let hx = h.grad(x)?.coords;
        Ok((&z_dual.coords + hx * tau - g * (tau / mu)) / (1.0 + tau))
    };
    let eval = |x: &Vector| -> Result<(Vector, Matrix)> {
        let theta = DualPoint::new(theta_of(x)?);
        let z = h.mirror_inverse(&theta)?;
        let r = x - (&z * tau + x_k) / (1.0 + tau);
        let jstar = h.mirror_inverse_jacobian(&theta)?;
        let inner = (h.hessian(x)? - f.hessian(x)? / mu) * w;
        let jac = Matrix::identity(n, n) - jstar * inner * w;
        Ok((r, jac))
    };
    let (x, res, iters) = newton(h, x_k, eval)?;
    let (z, z_dual_new) = h.from_dual(theta_of(&x)?)?;
    let coupling = relative(&(&x - (&z * tau + x_k) / (1.0 + tau)), &x);
    Ok(ImplicitSolution { x, z, z_dual: z_dual_new, residual: res.max(coupling), iterations: iters })
}

/// High-accuracy minimiser of a smooth unconstrained objective: implicit steps with
/// `A_k = 2^k` until the gradient is below `tol`, then Newton polishing.
pub fn reference_solve(f: &Objective, tol: f64) -> Result<Vector> {
    if !f.has_hessian() {
        return Err(LabError::IncompatibleConfiguration(format!("{} is nonsmooth; no reference solver", f.id)));
    }
    let h = DistanceGenerator::euclidean(f.dim);
    let mut x = Vector::zeros(f.dim);
    let mut dual = DualPoint::new(x.clone());
    let mut a = 1.0;
    for _ in 0..80 {
        if f.grad(&x)?.norm() <= tol {
            break;
        }
        let alpha = a;
        let tau = alpha / a;
        let sol = solve_implicit_weak(f, &h, &x, &dual, alpha, tau)?;
        x = sol.x;
        dual = sol.z_dual;
        a *= 2.0;
    }
    for _ in 0..20 {
        let g = f.grad(&x)?;
        if g.norm() <= tol * 1e-2 {
            break;
        }
        let step = crate::linalg::solve(&f.hessian(&x)?, &g)?;
        let cand = &x - step;
        if f.grad(&cand)?.norm() >= g.norm() {
            break;
        }
        x = cand;
    }
    let gn = f.grad(&x)?.norm();
    if gn > 1e-8 {
        return Err(LabError::InnerSolverDiverged { iters: 100, residual: gn });
    }
    Ok(x)
}
