//! Internal consistency suite: geometry identities, oracle checks, reduction
//! identities between methods, and negative controls that must fail.

use crate::certify::{certify, certify_default, schedule_feasibility, FeasibilityCondition};
use crate::geometry::{sample_simplex, DistanceGenerator};
use crate::linalg::{gaussian_vector, rng};
use crate::methods::{run, DiscreteSchedule, GradientMapSpec, MethodConfig, MethodId, NoiseSpec, TauConvention, Trace};
use crate::problems::{corpus, curvature_check, finite_diff_check, finite_diff_check_composite, gaussian_points, CorpusParams, FeasibleSet, Problem};
use crate::{Result, Vector};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, r: Result<(bool, String)>) -> Check {
    match r {
        Ok((pass, detail)) => Check { name: name.into(), pass, detail },
        Err(e) => Check { name: name.into(), pass: false, detail: format!("error: {e}") },
    }
}

fn generators(n: usize) -> Vec<DistanceGenerator> {
    vec![
        DistanceGenerator::euclidean(n),
        DistanceGenerator::euclidean_box(-1.0, 1.0, n).expect("box"),
        DistanceGenerator::p_power(3.0, n).expect("p_power"),
        DistanceGenerator::p_power(4.0, n).expect("p_power"),
        DistanceGenerator::p_power_separable(4.0, n).expect("p_power_separable"),
        DistanceGenerator::negative_entropy(n),
    ]
}

fn round_trip(h: &DistanceGenerator) -> Result<(bool, String)> {
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = h.sample_point(&mut r, 0.8);
        let back = h.mirror_inverse(&h.grad(&x)?)?;
        worst = worst.max((&back - &x).norm() / (1.0 + x.norm()));
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.3e}")))
}

fn three_point(h: &DistanceGenerator) -> Result<(bool, String)> {
    let mut r = rng(12);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (x, y, z) = (h.sample_point(&mut r, 0.8), h.sample_point(&mut r, 0.8), h.sample_point(&mut r, 0.8));
        let (dxy, dyz, dxz) = (h.divergence(&x, &y)?, h.divergence(&y, &z)?, h.divergence(&x, &z)?);
        let inner = (h.grad(&y)?.coords - h.grad(&z)?.coords).dot(&(&x - &y));
        let err = (dxz - dxy - dyz - inner).abs() / (1.0 + dxz.abs() + dxy.abs() + dyz.abs() + inner.abs());
        worst = worst.max(err);
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.3e}")))
}

fn convexity(h: &DistanceGenerator) -> Result<(bool, String)> {
    let rep = h.check_uniform_convexity(200, 13);
    Ok((rep.pass, format!("min D_h/(sigma/2 |y-x|^2) ratio {:.4}", rep.min_ratio)))
}

fn fd_gradients() -> Vec<Check> {
    let dims = [
        ("quadratic_illcond", 6),
        ("quadratic_identity", 6),
        ("logsumexp", 5),
        ("lasso", 6),
        ("l1_on_box", 5),
        ("logistic", 5),
        ("l1_ridge", 5),
        ("simplex_quadratic", 5),
        ("simplex_holder", 5),
        ("quad_quartic", 3),
        ("relative_entropy", 5),
    ];
    let mut out = Vec::new();
    for (name, n) in dims {
        out.push(check(format!("finite-difference gradient: {name}"), (|| {
            let inst = corpus(name, n, 3, &CorpusParams::new())?;
            let mut r = rng(14);
            let x = match inst.set {
                Some(FeasibleSet::Simplex { .. }) => sample_simplex(&mut r, n) * 0.9 + Vector::from_element(n, 0.1 / n as f64),
                _ => &inst.reference()?.x_star + gaussian_vector(&mut r, n) * 0.3,
            };
            let rep = match &inst.problem {
                Problem::Plain(o) => finite_diff_check(o, &x, 1e-6)?,
                Problem::Composite(c) => finite_diff_check_composite(c, &x, 1e-6)?,
            };
            Ok((rep.pass, format!("max scaled deviation {:.3e}", rep.max_deviation)))
        })()));
    }
    out
}

fn curvature() -> Vec<Check> {
    let mut out = Vec::new();
    for name in ["quadratic_illcond", "quadratic_identity", "logsumexp", "logistic", "l1_ridge", "quad_quartic"] {
        out.push(check(format!("curvature bounds: {name}"), (|| {
            let inst = corpus(name, 4, 5, &CorpusParams::new())?;
            let f = inst.objective()?;
            let mut r = rng(15);
            let mut pts = gaussian_points(&mut r, inst.reference()?.x_star.clone(), 0.3);
            let rep = curvature_check(f, &mut pts, 200)?;
            Ok((rep.pass, format!("curvature ratios in [{:.4e}, {:.4e}]", rep.min_ratio, rep.max_ratio)))
        })()));
    }
    out
}

fn max_iterate_gap(a: &Trace, b: &Trace) -> f64 {
    a.records
        .iter()
        .zip(&b.records)
        .map(|(p, q)| {
            let d = (&p.state.x - &q.state.x).norm() + (&p.state.y - &q.state.y).norm() + (&p.state.z - &q.state.z).norm();
            d / (1.0 + p.state.y.norm())
        })
        .fold(0.0, f64::max)
}

fn reductions() -> Vec<Check> {
    let mut out = Vec::new();
    // FISTA with ψ ≡ 0 is family I with the coupled map.
    out.push(check("reduction: fista with zero simple part equals family I + tseng_coupled", (|| {
        let inst = corpus("quadratic_illcond", 8, 2, &CorpusParams::from([("kappa".to_string(), 50.0)]))?;
        let l = inst.meta().lipschitz_grad_l.expect("L");
        let s = DiscreteSchedule::quadratic(1.0 / l, (1.0 / l).sqrt())?;
        let a = run(&MethodConfig::new(MethodId::Fista), &inst, &s, 40, 0)?;
        let b = run(&MethodConfig::new(MethodId::AgdFamilyI).with_gmap(GradientMapSpec::TsengCoupled), &inst, &s, 40, 0)?;
        let d = max_iterate_gap(&a, &b);
        Ok((d <= 1e-12, format!("max iterate difference {d:.3e}")))
    })()));
    // Zero noise reproduces the deterministic trace exactly.
    out.push(check("reduction: zero-scale noise equals exact gradients", (|| {
        let inst = corpus("l1_on_box", 6, 0, &CorpusParams::new())?;
        let s = DiscreteSchedule::new(crate::methods::ScheduleKind::Sqrt { a0: 1.0, c: 1.0 }, 1.0, TauConvention::TauOverAk1)?;
        let exact = run(&MethodConfig::new(MethodId::QuasiMonotone), &inst, &s, 50, 4)?;
        let noisy = run(&MethodConfig::new(MethodId::QuasiMonotone).with_noise(NoiseSpec::Gaussian { scale: 0.0 }), &inst, &s, 50, 4)?;
        let d = max_iterate_gap(&exact, &noisy);
        Ok((d == 0.0, format!("max iterate difference {d:.3e}")))
    })()));
    // The quasi-monotone method is family I with the identity map.
    out.push(check("reduction: quasi_monotone equals family I + identity_xk1", (|| {
        let inst = corpus("logsumexp", 6, 1, &CorpusParams::new())?;
        let s = DiscreteSchedule::new(crate::methods::ScheduleKind::Sqrt { a0: 1.0, c: 0.5 }, 1.0, TauConvention::TauOverAk1)?;
        let a = run(&MethodConfig::new(MethodId::QuasiMonotone), &inst, &s, 40, 0)?;
        let b = run(&MethodConfig::new(MethodId::AgdFamilyI).with_gmap(GradientMapSpec::IdentityXk1), &inst, &s, 40, 0)?;
        let d = max_iterate_gap(&a, &b);
        Ok((d == 0.0, format!("max iterate difference {d:.3e}")))
    })()));
    out
}

fn agd_trace(eps_sigma_factor: f64) -> Result<(Trace, crate::problems::ReferenceSolution, f64)> {
    let inst = corpus("quadratic_illcond", 10, 6, &CorpusParams::from([("kappa".to_string(), 100.0)]))?;
    let l = inst.meta().lipschitz_grad_l.expect("L");
    let s = DiscreteSchedule::quadratic(eps_sigma_factor / l, (1.0 / l).sqrt())?;
    let t = run(&MethodConfig::new(MethodId::AgdFamilyI), &inst, &s, 60, 0)?;
    Ok((t, inst.reference()?.clone(), l))
}

fn negative_controls() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(check("control: clean trace certifies", (|| {
        let (t, r, _) = agd_trace(1.0)?;
        let rep = certify_default(&t, &r)?;
        Ok((rep.overall, format!("{} checks", rep.checks)))
    })()));
    out.push(check("control: corrupted trace is rejected at the corrupted step", (|| {
        let (mut t, r, _) = agd_trace(1.0)?;
        t.records[20].f_y += 1.0;
        t.records[20].state.y *= 1.5;
        let rep = certify_default(&t, &r)?;
        Ok((!rep.overall && rep.first_failure == Some(19), format!("first failure {:?}", rep.first_failure)))
    })()));
    // Too fast a schedule does not break E_{k+1} − E_k ≤ δε_{k+1}; it makes ε_{k+1} positive.
    out.push(check("control: infeasible schedule fails feasibility and yields positive errors", (|| {
        let (t, r, l) = agd_trace(8.0)?;
        let feas = schedule_feasibility(&t.meta.schedule, FeasibilityCondition::QuadraticGrowth { eps_sigma: 1.0 / l }, 60)?;
        let (kind, formula) = crate::certify::default_certificate(&t);
        let rep = certify(&t, kind, formula, &r)?;
        let worst = rep.max_error();
        Ok((!feas.pass && worst > rep.slack_used, format!("feasibility ratio {:.3}, max error term {worst:.3e}", feas.max_ratio)))
    })()));
    let rejected = DistanceGenerator::negative_entropy(3).check_domain(&Vector::from_column_slice(&[0.5, 0.6, -0.1])).is_err();
    out.push(check("control: entropy geometry rejects points off the simplex", Ok((rejected, "negative coordinate".into()))));
    out
}

/// Run every check. The suite passes when every entry passes.
pub fn selfcheck() -> Vec<Check> {
    let mut out = Vec::new();
    for h in generators(4) {
        out.push(check(format!("mirror round trip: {}", h.name()), round_trip(&h)));
        out.push(check(format!("three-point identity: {}", h.name()), three_point(&h)));
        out.push(check(format!("uniform convexity: {}", h.name()), convexity(&h)));
    }
    out.extend(fd_gradients());
    out.extend(curvature());
    out.extend(reductions());
    out.extend(negative_controls());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        let checks = selfcheck();
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(checks.len() > 30);
    }
}
