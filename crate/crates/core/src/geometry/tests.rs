use super::*;
use crate::linalg::rng;
use proptest::prelude::*;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn all_generators(dim: usize) -> Vec<DistanceGenerator> {
    vec![
        DistanceGenerator::euclidean(dim),
        DistanceGenerator::p_power(3.0, dim).unwrap(),
        DistanceGenerator::p_power(4.0, dim).unwrap(),
        DistanceGenerator::p_power_separable(4.0, dim).unwrap(),
        DistanceGenerator::negative_entropy(dim),
        DistanceGenerator::euclidean_box(-1.0, 1.0, dim).unwrap(),
    ]
}

#[test]
fn euclidean_divergence_example() {
    let h = DistanceGenerator::euclidean(2);
    assert_eq!(h.divergence(&v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 0.5);
}

#[test]
fn divergence_vanishes_on_diagonal() {
    let mut r = rng(1);
    for h in all_generators(3) {
        let x = h.sample_point(&mut r, 1.0);
        assert!(h.divergence(&x, &x).unwrap().abs() < 1e-15, "{}", h.name());
    }
}

#[test]
fn entropy_divergence_is_kl() {
    let h = DistanceGenerator::negative_entropy(2);
    let y = v(&[0.5, 0.5]);
    let x = v(&[0.25, 0.75]);
    let kl: f64 = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
    assert!((h.divergence(&y, &x).unwrap() - kl).abs() < 1e-15);
    assert!((h.divergence_from_dual(&y, &h.grad(&x).unwrap()).unwrap() - kl).abs() < 1e-15);
}

#[test]
fn grad_examples() {
    let h = DistanceGenerator::euclidean(2);
    assert_eq!(h.grad(&v(&[3.0, -1.0])).unwrap().coords, v(&[3.0, -1.0]));
    let h4 = DistanceGenerator::p_power(4.0, 1).unwrap();
    assert!((h4.grad(&v(&[2.0])).unwrap().coords[0] - 8.0).abs() < 1e-14);
    let hs = DistanceGenerator::p_power_separable(4.0, 1).unwrap();
    assert!((hs.grad(&v(&[2.0])).unwrap().coords[0] - 8.0).abs() < 1e-14);
    let he = DistanceGenerator::negative_entropy(2);
    let g = he.grad(&v(&[0.5, 0.5])).unwrap();
    for i in 0..2 {
        assert!((g.coords[i] - (1.0 + 0.5f64.ln())).abs() < 1e-15);
    }
}

#[test]
fn entropy_grad_matches_finite_differences() {
    let h = DistanceGenerator::negative_entropy(2);
    // h restricted to the line x = (t, 1 − t): d/dt h = ln t − ln(1 − t).
    let t = 0.5;
    let step = 1e-6;
    let f = |s: f64| h.value(&v(&[s, 1.0 - s])).unwrap();
    let fd = (f(t + step) - f(t - step)) / (2.0 * step);
    let g = h.grad(&v(&[t, 1.0 - t])).unwrap().coords;
    assert!((fd - (g[0] - g[1])).abs() < 1e-8);
}

#[test]
fn mirror_inverse_examples() {
    let h = DistanceGenerator::euclidean(2);
    assert_eq!(h.mirror_inverse(&DualPoint::new(v(&[3.0, -1.0]))).unwrap(), v(&[3.0, -1.0]));
    let h4 = DistanceGenerator::p_power(4.0, 1).unwrap();
    assert!((h4.mirror_inverse(&DualPoint::new(v(&[8.0]))).unwrap()[0] - 2.0).abs() < 1e-14);
    let he = DistanceGenerator::negative_entropy(2);
    for c in [-40.0, 0.0, 3.7, 500.0] {
        let x = he.mirror_inverse(&DualPoint::new(v(&[c, c]))).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15);
    }
}

#[test]
fn entropy_boundary_is_singular() {
    let h = DistanceGenerator::negative_entropy(2);
    let x = v(&[0.0, 1.0]);
    assert!(matches!(h.grad(&x), Err(LabError::SingularPoint(_))));
    assert!(matches!(h.divergence(&v(&[0.5, 0.5]), &x), Err(LabError::SingularPoint(_))));
    // y on the boundary is fine.
    assert!(h.divergence(&x, &v(&[0.5, 0.5])).unwrap().is_finite());
}

#[test]
fn domain_violations() {
    let h = DistanceGenerator::negative_entropy(2);
    assert!(matches!(h.value(&v(&[0.7, 0.7])), Err(LabError::DomainViolation(_))));
    let b = DistanceGenerator::euclidean_box(0.0, 1.0, 1).unwrap();
    assert!(matches!(b.value(&v(&[2.0])), Err(LabError::DomainViolation(_))));
    assert!(DistanceGenerator::p_power(1.5, 2).is_err());
}

#[test]
fn modulus_metadata() {
    assert_eq!(DistanceGenerator::euclidean(3).sigma, 1.0);
    assert_eq!(DistanceGenerator::p_power(4.0, 3).unwrap().sigma, 0.25);
    assert_eq!(DistanceGenerator::p_power(3.0, 3).unwrap().sigma, 0.5);
    let e = DistanceGenerator::negative_entropy(3);
    assert_eq!((e.sigma, e.p), (1.0, 2.0));
}

#[test]
fn uniform_convexity_sampling() {
    let r = DistanceGenerator::euclidean(4).check_uniform_convexity(1000, 5);
    assert!(r.pass && (r.min_ratio - 1.0).abs() < 1e-9);
    for h in [
        DistanceGenerator::p_power(4.0, 3).unwrap(),
        DistanceGenerator::p_power(3.0, 3).unwrap(),
        DistanceGenerator::p_power_separable(4.0, 3).unwrap(),
        DistanceGenerator::negative_entropy(4),
    ] {
        let r = h.check_uniform_convexity(1000, 11);
        assert!(r.pass, "{} min ratio {}", h.name(), r.min_ratio);
        assert_eq!(r.samples, 1000);
    }
}

#[test]
fn mirror_step_representative_round_trips() {
    let h = DistanceGenerator::negative_entropy(3);
    let d = DualPoint::new(v(&[0.1, 2.0, -1.0]));
    let (z, canon) = h.mirror_step(&d, &v(&[1.0, 0.0, 0.0])).unwrap();
    assert!((h.mirror_inverse(&canon).unwrap() - &z).amax() < 1e-15);
    let b = DistanceGenerator::euclidean_box(-1.0, 1.0, 2).unwrap();
    let (z, canon) = b.mirror_step(&DualPoint::new(v(&[0.5, 0.5])), &v(&[2.0, -0.2])).unwrap();
    assert_eq!(z, v(&[1.0, 0.3]));
    assert_eq!(canon.coords, z);
}

#[test]
fn mirror_jacobian_matches_finite_differences() {
    let mut r = rng(9);
    for h in [
        DistanceGenerator::p_power(3.0, 3).unwrap(),
        DistanceGenerator::p_power_separable(4.0, 3).unwrap(),
        DistanceGenerator::negative_entropy(3),
    ] {
        let x = h.sample_point(&mut r, 1.0);
        let d = h.grad(&x).unwrap();
        let j = h.mirror_inverse_jacobian(&d).unwrap();
        let step = 1e-6;
        for c in 0..3 {
            let mut dp = d.coords.clone();
            let mut dm = d.coords.clone();
            dp[c] += step;
            dm[c] -= step;
            let col = (h.mirror_inverse(&DualPoint::new(dp)).unwrap()
                - h.mirror_inverse(&DualPoint::new(dm)).unwrap())
                / (2.0 * step);
            // Relative: the separable inverse is steep where a coordinate is near zero.
            assert!((&col - j.column(c)).amax() < 1e-6 * (1.0 + j.column(c).amax()), "{}", h.name());
        }
    }
}

#[test]
fn hessian_matches_finite_differences() {
    let mut r = rng(12);
    for h in [
        DistanceGenerator::p_power(3.0, 3).unwrap(),
        DistanceGenerator::p_power(4.0, 3).unwrap(),
        DistanceGenerator::p_power_separable(3.0, 3).unwrap(),
    ] {
        let x = h.sample_point(&mut r, 1.0);
        let hs = h.hessian(&x).unwrap();
        let step = 1e-6;
        for c in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += step;
            xm[c] -= step;
            let col = (h.grad(&xp).unwrap().coords - h.grad(&xm).unwrap().coords) / (2.0 * step);
            assert!((col - hs.column(c)).amax() < 1e-6, "{}", h.name());
        }
    }
}

fn simplex_from(raw: &[f64]) -> Vector {
    let e = Vector::from_iterator(raw.len(), raw.iter().map(|r| r + 1e-3));
    let s = e.sum();
    e / s
}

proptest! {
    #[test]
    fn round_trip_full_space(xs in proptest::collection::vec(-5.0f64..5.0, 4), which in 0usize..4) {
        let h = [
            DistanceGenerator::euclidean(4),
            DistanceGenerator::p_power(3.0, 4).unwrap(),
            DistanceGenerator::p_power(4.0, 4).unwrap(),
            DistanceGenerator::p_power_separable(4.0, 4).unwrap(),
        ][which];
        let x = Vector::from_vec(xs);
        let back = h.mirror_inverse(&h.grad(&x).unwrap()).unwrap();
        prop_assert!((&back - &x).amax() <= 1e-10 * (1.0 + x.amax()));
    }

    #[test]
    fn round_trip_entropy(raw in proptest::collection::vec(0.0f64..1.0, 5)) {
        let h = DistanceGenerator::negative_entropy(5);
        let x = simplex_from(&raw);
        let back = h.mirror_inverse(&h.grad(&x).unwrap()).unwrap();
        prop_assert!((&back - &x).amax() <= 1e-10 * x.amax());
    }

    #[test]
    fn three_point_identity(a in proptest::collection::vec(-3.0f64..3.0, 3),
                            b in proptest::collection::vec(-3.0f64..3.0, 3),
                            c in proptest::collection::vec(-3.0f64..3.0, 3),
                            which in 0usize..3) {
        let h = [
            DistanceGenerator::euclidean(3),
            DistanceGenerator::p_power(3.0, 3).unwrap(),
            DistanceGenerator::p_power_separable(4.0, 3).unwrap(),
        ][which];
        let (x, z, xx) = (Vector::from_vec(a), Vector::from_vec(b), Vector::from_vec(c));
        let lhs = (h.grad(&z).unwrap().coords - h.grad(&xx).unwrap().coords).dot(&(&x - &z))
            + h.divergence(&x, &z).unwrap();
        let rhs = h.divergence(&x, &xx).unwrap() - h.divergence(&z, &xx).unwrap();
        let scale = 1.0 + h.value(&x).unwrap().abs() + h.value(&z).unwrap().abs() + h.value(&xx).unwrap().abs();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
    }

    #[test]
    fn three_point_identity_entropy(a in proptest::collection::vec(0.0f64..1.0, 4),
                                    b in proptest::collection::vec(0.0f64..1.0, 4),
                                    c in proptest::collection::vec(0.0f64..1.0, 4)) {
        let h = DistanceGenerator::negative_entropy(4);
        let (x, z, xx) = (simplex_from(&a), simplex_from(&b), simplex_from(&c));
        let lhs = (h.grad(&z).unwrap().coords - h.grad(&xx).unwrap().coords).dot(&(&x - &z))
            + h.divergence(&x, &z).unwrap();
        let rhs = h.divergence(&x, &xx).unwrap() - h.divergence(&z, &xx).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn nonnegative_and_modulus(a in proptest::collection::vec(-4.0f64..4.0, 3),
                               b in proptest::collection::vec(-4.0f64..4.0, 3),
                               which in 0usize..4) {
        let h = [
            DistanceGenerator::euclidean(3),
            DistanceGenerator::p_power(3.0, 3).unwrap(),
            DistanceGenerator::p_power(4.0, 3).unwrap(),
            DistanceGenerator::p_power_separable(4.0, 3).unwrap(),
        ][which];
        let (y, x) = (Vector::from_vec(a), Vector::from_vec(b));
        let d = h.divergence(&y, &x).unwrap();
        prop_assert!(d >= -1e-12);
        prop_assert!(d >= h.sigma / h.p * (&y - &x).norm().powf(h.p) - 1e-9 * (1.0 + d.abs()));
    }

    #[test]
    fn entropy_modulus(a in proptest::collection::vec(0.0f64..1.0, 4),
                       b in proptest::collection::vec(0.0f64..1.0, 4)) {
        let h = DistanceGenerator::negative_entropy(4);
        let (y, x) = (simplex_from(&a), simplex_from(&b));
        let d = h.divergence(&y, &x).unwrap();
        prop_assert!(d >= -1e-12);
        prop_assert!(d >= 0.5 * (&y - &x).norm_squared() - 1e-9);
    }
}
