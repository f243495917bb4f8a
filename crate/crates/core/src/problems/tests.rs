use super::*;
use crate::linalg::{gaussian_vector, rng};
use proptest::prelude::*;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// Simplex projection by bisection on the threshold `θ` in `Σ max(x_i − θ, 0) = 1`.
fn bisection_projection(x: &Vector) -> Vector {
    let mass = |t: f64| x.iter().map(|&u| (u - t).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (x.min() - 1.0, x.max());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    x.map(|u| (u - t).max(0.0))
}

fn instance_point(inst: &ProblemInstance, seed: u64) -> Vector {
    let mut r = rng(seed);
    match inst.set {
        Some(set) => set.sample(&mut r),
        None => &inst.reference().unwrap().x_star + gaussian_vector(&mut r, inst.dim()) * 0.5,
    }
}

#[test]
fn quadratic_identity_example() {
    let inst = corpus("quadratic_identity", 3, 0, &CorpusParams::new()).unwrap();
    let f = inst.objective().unwrap();
    let r = inst.reference().unwrap();
    let x = &r.x_star + v(&[1.0, 2.0, 2.0]);
    // Unit Hessian: the gap is ½‖x − x*‖² and the gradient is x − x*.
    assert!((f.value(&x).unwrap() - r.f_star - 4.5).abs() < 1e-12);
    assert!((f.grad(&x).unwrap() - v(&[1.0, 2.0, 2.0])).norm() < 1e-12);
}

#[test]
fn l1_prox_soft_thresholds() {
    let p = SimplePart::L1 { weight: 2.0 }.prox(&v(&[3.0, -0.5, -4.0, 1.0]), 0.5).unwrap();
    assert_eq!(p, v(&[2.0, 0.0, -3.0, 0.0]));
    assert!(SimplePart::L1 { weight: 1.0 }.prox(&v(&[1.0]), 0.0).is_err());
}

#[test]
fn squared_norm_and_box_prox() {
    assert_eq!(SimplePart::SquaredNorm { weight: 1.0 }.prox(&v(&[2.0, -4.0]), 1.0).unwrap(), v(&[1.0, -2.0]));
    assert_eq!(SimplePart::IndicatorBox { lo: -1.0, hi: 1.0 }.prox(&v(&[2.0, 0.5]), 3.0).unwrap(), v(&[1.0, 0.5]));
    assert!(SimplePart::IndicatorBox { lo: -1.0, hi: 1.0 }.value(&v(&[2.0])).is_infinite());
}

#[test]
fn simplex_projection_examples() {
    assert_eq!(project_simplex(&v(&[0.25, 0.75])), v(&[0.25, 0.75]));
    assert_eq!(project_simplex(&v(&[2.0, 0.0])), v(&[1.0, 0.0]));
    let p = project_simplex(&v(&[1.0, 1.0, 1.0]));
    assert!((p - Vector::from_element(3, 1.0 / 3.0)).norm() < 1e-15);
}

#[test]
fn lmo_returns_extreme_points() {
    let d = v(&[0.3, -2.0, 1.0]);
    assert_eq!(FeasibleSet::Simplex { dim: 3 }.lmo(&d).unwrap(), v(&[0.0, 1.0, 0.0]));
    assert_eq!(FeasibleSet::L1Ball { radius: 2.0, dim: 3 }.lmo(&d).unwrap(), v(&[0.0, 2.0, 0.0]));
    assert_eq!(FeasibleSet::Box { lo: -1.0, hi: 3.0, dim: 3 }.lmo(&d).unwrap(), v(&[-1.0, 3.0, -1.0]));
    let b = FeasibleSet::L2Ball { radius: 1.0, dim: 3 }.lmo(&d).unwrap();
    assert!((b + &d / d.norm()).norm() < 1e-15);
    // Ties go to the lowest index.
    assert_eq!(FeasibleSet::Simplex { dim: 3 }.lmo(&v(&[1.0, 1.0, 1.0])).unwrap(), v(&[1.0, 0.0, 0.0]));
    assert!(FeasibleSet::Simplex { dim: 3 }.lmo(&v(&[1.0, 1.0])).is_err());
    assert!(FeasibleSet::Simplex { dim: 2 }.lmo(&v(&[f64::NAN, 1.0])).is_err());
}

#[test]
fn unknown_corpus_name_is_rejected() {
    assert!(corpus("no_such_problem", 3, 0, &CorpusParams::new()).is_err());
    assert!(corpus("quadratic_illcond", 3, 0, &CorpusParams::from([("kappa".to_string(), -1.0)])).is_err());
}

#[test]
fn corpus_is_deterministic_in_the_seed() {
    for name in corpus_names() {
        let a = corpus(name, 4, 7, &CorpusParams::new()).unwrap();
        let b = corpus(name, 4, 7, &CorpusParams::new()).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn every_corpus_entry_has_a_reference_and_metadata() {
    for name in corpus_names() {
        let inst = corpus(name, 5, 1, &CorpusParams::new()).unwrap();
        let r = inst.reference().unwrap();
        assert_eq!(r.x_star.len(), 5, "{name}");
        assert!(r.f_star.is_finite(), "{name}");
        if let Some(set) = inst.set {
            assert!(set.contains(&r.x_star, 1e-9), "{name}: x* outside the set");
        }
        let m = inst.meta();
        let known = [m.lipschitz_grad_l, m.subgradient_bound_g, m.strong_convexity_mu, m.holder.map(|h| h.epsilon)];
        assert!(known.iter().any(|c| c.is_some()), "{name}");
    }
}

#[test]
fn composite_reference_is_stationary() {
    let inst = corpus("lasso", 8, 2, &CorpusParams::new()).unwrap();
    let Problem::Composite(c) = &inst.problem else { panic!("lasso is composite") };
    let l = c.smooth.meta.lipschitz_grad_l.unwrap();
    let res = c.optimality_residual(&c.reference().unwrap().x_star, 1.0 / l).unwrap();
    assert!(res < 1e-8, "residual {res}");
}

#[test]
fn finite_difference_rejects_bad_step() {
    let inst = corpus("quadratic_identity", 3, 0, &CorpusParams::new()).unwrap();
    assert!(finite_diff_check(inst.objective().unwrap(), &Vector::zeros(3), 1e-1).is_err());
}

proptest! {
    #[test]
    fn projection_matches_bisection(xs in prop::collection::vec(-3.0f64..3.0, 1..8)) {
        let x = Vector::from_vec(xs);
        let p = project_simplex(&x);
        prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&u| u >= 0.0));
        prop_assert!((&p - bisection_projection(&x)).norm() < 1e-9);
        prop_assert!((project_simplex(&p) - &p).norm() < 1e-12);
    }

    #[test]
    fn l1_prox_satisfies_optimality(xs in prop::collection::vec(-3.0f64..3.0, 1..8), w in 0.01f64..2.0, step in 0.01f64..2.0) {
        let x = Vector::from_vec(xs);
        let z = SimplePart::L1 { weight: w }.prox(&x, step).unwrap();
        // 0 ∈ z − x + step·w·∂|z|.
        for i in 0..x.len() {
            let r = x[i] - z[i];
            if z[i] != 0.0 {
                prop_assert!((r - step * w * z[i].signum()).abs() < 1e-12);
            } else {
                prop_assert!(r.abs() <= step * w + 1e-12);
            }
        }
    }

    #[test]
    fn huber_prox_beats_perturbations(xs in prop::collection::vec(-3.0f64..3.0, 1..6), step in 0.05f64..2.0, seed in 0u64..100) {
        let x = Vector::from_vec(xs);
        let psi = SimplePart::Huber { weight: 0.7, width: 0.3 };
        let obj = |z: &Vector| psi.value(z) + (z - &x).norm_squared() / (2.0 * step);
        let z = psi.prox(&x, step).unwrap();
        let mut r = rng(seed);
        for _ in 0..20 {
            let d = gaussian_vector(&mut r, x.len()) * 1e-3;
            prop_assert!(obj(&z) <= obj(&(&z + d)) + 1e-12);
        }
    }

    #[test]
    fn lmo_is_minimal_over_samples(seed in 0u64..200, dim in 2usize..7) {
        let mut r = rng(seed);
        let d = gaussian_vector(&mut r, dim);
        for set in [
            FeasibleSet::Simplex { dim },
            FeasibleSet::L1Ball { radius: 1.5, dim },
            FeasibleSet::L2Ball { radius: 0.5, dim },
            FeasibleSet::Box { lo: -1.0, hi: 2.0, dim },
        ] {
            let s = set.lmo(&d).unwrap();
            prop_assert!(set.contains(&s, 1e-12));
            let round = matches!(set, FeasibleSet::L2Ball { .. });
            prop_assert!(round || set.is_extreme_point(&s, 1e-9));
            for _ in 0..30 {
                let p = set.sample(&mut r);
                prop_assert!(set.contains(&p, 1e-12));
                prop_assert!(d.dot(&s) <= d.dot(&p) + 1e-12);
            }
        }
    }

    #[test]
    fn reference_value_is_a_lower_bound(idx in 0usize..11, seed in 0u64..50) {
        let name = corpus_names()[idx];
        let inst = corpus(name, 4, 3, &CorpusParams::new()).unwrap();
        let r = inst.reference().unwrap();
        let c = inst.as_composite();
        let x = instance_point(&inst, seed);
        let val = c.value(&x).unwrap();
        prop_assert!(val >= r.f_star - 1e-9 * (1.0 + r.f_star.abs()), "{}: {} < {}", name, val, r.f_star);
    }

    #[test]
    fn gradients_match_finite_differences(idx in 0usize..11, seed in 0u64..30) {
        let name = corpus_names()[idx];
        let inst = corpus(name, 4, 5, &CorpusParams::new()).unwrap();
        let x = match inst.set {
            Some(FeasibleSet::Simplex { .. }) => {
                let s = instance_point(&inst, seed);
                s * 0.8 + Vector::from_element(4, 0.05)
            }
            _ => instance_point(&inst, seed),
        };
        let rep = match &inst.problem {
            Problem::Plain(o) if !o.is_nonsmooth_at(&x) => finite_diff_check(o, &x, 1e-6).unwrap(),
            Problem::Composite(c) => finite_diff_check_composite(c, &x, 1e-6).unwrap(),
            _ => return Ok(()),
        };
        prop_assert!(rep.pass, "{}: deviation {}", name, rep.max_deviation);
    }
}
