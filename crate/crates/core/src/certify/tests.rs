use super::*;
use crate::linalg::{gaussian_vector, rng};
use crate::methods::{run, DiscreteSchedule, MethodConfig, TauConvention};
use crate::problems::{corpus, CorpusParams, ProblemInstance};
use proptest::prelude::*;

fn params(kv: &[(&str, f64)]) -> CorpusParams {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn agd(n: usize, seed: u64) -> (Trace, ProblemInstance) {
    let inst = corpus("quadratic_illcond", 8, 4, &params(&[("kappa", 100.0)])).unwrap();
    let l = inst.meta().lipschitz_grad_l.unwrap();
    let s = DiscreteSchedule::quadratic(1.0 / l, (1.0 / l).sqrt()).unwrap();
    let x0 = gaussian_vector(&mut rng(seed), 8);
    let t = run(&MethodConfig::new(MethodId::AgdFamilyI).with_x0(x0), &inst, &s, n, 0).unwrap();
    (t, inst)
}

#[test]
fn weak_y_lyapunov_by_hand() {
    let (t, inst) = agd(30, 1);
    let r = inst.reference().unwrap();
    let e = evaluate_lyapunov(&t, LyapunovKind::WeakY, r).unwrap();
    for (k, rec) in t.records.iter().enumerate() {
        let expect = 0.5 * (&r.x_star - &rec.state.z).norm_squared() + rec.a_k * (rec.f_y - r.f_star);
        assert!((e[k] - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "k = {k}");
    }
}

#[test]
fn nesterov_error_term_by_hand() {
    let (t, inst) = agd(30, 2);
    let eps = 1.0 / inst.meta().lipschitz_grad_l.unwrap();
    let delta = t.meta.schedule.delta;
    let terms = evaluate_error_terms(&t, ErrorFormula::NesterovFamilyI, None).unwrap();
    for k in 0..30 {
        let (r0, r1) = (&t.records[k], &t.records[k + 1]);
        let g2 = inst.objective().unwrap().grad(&r1.state.x).unwrap().norm_squared();
        let alpha = r1.a_k - r0.a_k;
        let expect = (alpha * alpha / (2.0 * delta) - eps * r1.a_k / (2.0 * delta)) * g2;
        assert!((terms[k] - expect).abs() <= 1e-12 * expect.abs().max(1e-300), "k = {k}");
        assert!(terms[k] <= 0.0);
    }
}

#[test]
fn every_default_certificate_passes_on_small_runs() {
    let ak = TauConvention::TauOverAk;
    let ak1 = TauConvention::TauOverAk1;
    let q = corpus("quadratic_illcond", 6, 1, &params(&[("kappa", 50.0)])).unwrap();
    let l = q.meta().lipschitz_grad_l.unwrap();
    let mu = q.meta().strong_convexity_mu.unwrap();
    let lasso = corpus("lasso", 6, 2, &CorpusParams::new()).unwrap();
    let ll = lasso.meta().lipschitz_grad_l.unwrap();
    let sq = corpus("simplex_quadratic", 6, 2, &CorpusParams::new()).unwrap();
    let bx = corpus("l1_on_box", 6, 2, &CorpusParams::new()).unwrap();
    let cases: Vec<(MethodId, &ProblemInstance, DiscreteSchedule)> = vec![
        (MethodId::Implicit, &q, DiscreteSchedule::geometric(1.0, 1.0, ak).unwrap()),
        (MethodId::ImplicitStrong, &q, DiscreteSchedule::geometric(0.5, 1.0, ak).unwrap()),
        (MethodId::AgdFamilyI, &q, DiscreteSchedule::quadratic(1.0 / l, (1.0 / l).sqrt()).unwrap()),
        (MethodId::AgdFamilyII, &q, DiscreteSchedule::quadratic(1.0 / l, (1.0 / l).sqrt()).unwrap()),
        (MethodId::AgdStrong, &q, DiscreteSchedule::geometric((mu / l).sqrt(), (1.0 / l).sqrt(), ak1).unwrap()),
        (MethodId::QuasiMonotone, &bx, DiscreteSchedule::new(ScheduleKind::Sqrt { a0: 1.0, c: 0.5 }, 1.0, ak1).unwrap()),
        (MethodId::FrankWolfe, &sq, DiscreteSchedule::new(ScheduleKind::TwoOverKPlus2 { a0: 1.0 }, 1.0, ak1).unwrap()),
        (MethodId::Fista, &lasso, DiscreteSchedule::quadratic(1.0 / ll, 1.0).unwrap()),
    ];
    for (m, inst, s) in cases {
        let t = run(&MethodConfig::new(m), inst, &s, 40, 0).unwrap();
        let rep = certify_default(&t, inst.reference().unwrap()).unwrap();
        assert!(rep.overall, "{}: first failure {:?}", m.name(), rep.first_failure);
        assert_eq!((rep.checks, rep.per_k.len(), rep.gaps.len()), (40, 40, 41));
    }
}

#[test]
fn incompatible_kinds_are_rejected() {
    let (t, inst) = agd(5, 0);
    let r = inst.reference().unwrap();
    assert!(matches!(certify(&t, LyapunovKind::StrongY, ErrorFormula::Zero, r), Err(LabError::IncompatibleKind(_))));
    assert!(matches!(certify(&t, LyapunovKind::ValueOnly, ErrorFormula::Zero, r), Err(LabError::IncompatibleKind(_))));
    for k in ["weak_x", "weak_y", "strong_x", "strong_y", "value_only"] {
        assert_eq!(LyapunovKind::parse(k).unwrap().name(), k);
    }
    assert!(LyapunovKind::parse("weak").is_err());
}

#[test]
fn empty_trace_certifies_vacuously() {
    let (t, inst) = agd(0, 0);
    let rep = certify_default(&t, inst.reference().unwrap()).unwrap();
    assert!(rep.overall && rep.checks == 0 && rep.first_failure.is_none());
}

#[test]
fn non_finite_values_fail_the_step() {
    let (mut t, inst) = agd(10, 0);
    t.records[4].f_y = f64::NAN;
    let rep = certify_default(&t, inst.reference().unwrap()).unwrap();
    assert_eq!(rep.first_failure, Some(3));
}

#[test]
fn report_json_uses_capitalised_lyapunov_keys() {
    let (t, inst) = agd(3, 0);
    let v: serde_json::Value = serde_json::from_str(&certify_default(&t, inst.reference().unwrap()).unwrap().to_json()).unwrap();
    let e = &v["per_k"][0];
    assert!(e.get("E_k").is_some() && e.get("E_k1").is_some());
    assert_eq!(v["checks"], 3);
}

#[test]
fn fit_rate_needs_points() {
    assert!(fit_rate(&[1.0, 0.5, 0.2], false, 0.0).is_none());
    assert!(fit_rate(&[1.0; 10], false, 2.0).is_none());
}

#[test]
fn estimate_sequence_round_trip() {
    let (t, inst) = agd(40, 3);
    let r = inst.reference().unwrap();
    let (kind, formula) = default_certificate(&t);
    let es = to_estimate_sequence(&t, kind, formula, r).unwrap();
    let mut g = rng(8);
    let pts: Vec<_> = (0..20).map(|_| &r.x_star + gaussian_vector(&mut g, 8)).collect();
    let ks: Vec<usize> = (0..=40).collect();
    assert!(verify_estimate_sequence(&es, &inst, &pts, &ks).unwrap().pass);
    let rt = from_estimate_sequence(&es, &t, kind, r).unwrap();
    assert!(rt.pass && rt.max_rel_deviation <= 1e-12);
    assert!(to_estimate_sequence(&t, kind, ErrorFormula::HigherOrderDescent { conservative: true }, r).is_err());
}

proptest! {
    #[test]
    fn fit_recovers_polynomial_exponents(p in 0.3f64..4.0, c in 0.01f64..100.0) {
        let gaps: Vec<f64> = (0..200).map(|k| if k == 0 { c } else { c * (k as f64).powf(-p) }).collect();
        let f = fit_rate(&gaps, false, 0.0).unwrap();
        prop_assert!((f.exponent + p).abs() < 1e-9);
        prop_assert!(f.r2 > 1.0 - 1e-9);
        prop_assert_eq!(f.window, (100, 199));
    }

    #[test]
    fn fit_recovers_geometric_rates(rho in 0.5f64..0.999) {
        let gaps: Vec<f64> = (0..300).map(|k| rho.powi(k)).collect();
        let f = fit_rate(&gaps, true, 0.0).unwrap();
        prop_assert!((f.exponent - rho.ln()).abs() < 1e-9);
        let w = fit_rate_window(&gaps, 10, 50, true).unwrap();
        prop_assert!((w.exponent - rho.ln()).abs() < 1e-9);
    }

    #[test]
    fn corrupting_a_step_is_caught_there(k in 1usize..30, extra in 1e-6f64..1.0, seed in 0u64..10) {
        let (mut t, inst) = agd(30, seed);
        let r = inst.reference().unwrap();
        let e = &certify_default(&t, r).unwrap().per_k[k - 1];
        // Raise E_k just past the bound of step k - 1.
        let margin = e.rhs + e.slack / t.meta.schedule.delta - (e.e_next - e.e_k);
        t.records[k].f_y += (margin + extra * (1.0 + e.e_k.abs())) / t.records[k].a_k;
        let rep = certify_default(&t, r).unwrap();
        prop_assert!(!rep.overall);
        prop_assert_eq!(rep.first_failure, Some(k - 1));
    }

    #[test]
    fn fista_errors_are_nonpositive(seed in 0u64..20) {
        let inst = corpus("lasso", 10, seed, &CorpusParams::new()).unwrap();
        let l = inst.meta().lipschitz_grad_l.unwrap();
        let s = DiscreteSchedule::quadratic(1.0 / l, 1.0).unwrap();
        let t = run(&MethodConfig::new(MethodId::Fista), &inst, &s, 60, 0).unwrap();
        let rep = certify_default(&t, inst.reference().unwrap()).unwrap();
        prop_assert!(rep.overall);
        prop_assert!(rep.per_k.iter().all(|e| e.rhs <= e.slack));
    }
}
