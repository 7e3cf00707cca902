mod common;

use common::criteria;
use common::*;
use proptest::prelude::*;
use rollout_fabrics::fabric::{avoidance_geometry, barrier_h, limit_geometry};
use rollout_fabrics::linalg::{Matrix, Vector};
use rollout_fabrics::spec::{
    dynamic_pullback_value, energize, energize_value, pullback_value, sum_all, sum_value, Spec, SpecValue,
};

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

/// (n, M SPD, f, h, ẋ) with ẋ bounded away from zero.
fn energize_case() -> impl Strategy<Value = (Matrix, Vector, Vector, Vector)> {
    (1usize..=4).prop_flat_map(|n| {
        (vec_of(n * n), vec_of(n), vec_of(n), vec_of(n)).prop_filter_map("moving", move |(a, f, h, xd)| {
            let a = Matrix::from_vec(n, n, a);
            let m = &a * a.transpose() + Matrix::identity(n, n) * 0.5;
            let xd = Vector::from_vec(xd);
            (xd.norm() > 1e-2).then(|| (m, Vector::from_vec(f), Vector::from_vec(h), xd))
        })
    })
}

#[test]
fn oracle_suite_at_1000_states() {
    let v = criteria::algebra_oracle();
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn energized_specs_are_frictionless() {
    let v = criteria::frictionless();
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn shipped_geometries_are_homogeneous() {
    let v = criteria::homogeneity();
    assert!(v.pass, "{}", v.detail);
}

proptest! {
    #[test]
    fn energize_matches_oracle((m, f, h, xd) in energize_case()) {
        let e = energize_value(&h, &m, &f, &xd).unwrap();
        let oracle = energize_oracle(&col(&h), &dense(&m), &col(&f), &col(&xd));
        prop_assert!(max_err(&e.m, &e.f, &oracle) <= 1e-10);
    }

    #[test]
    fn energized_path_equals_geometry_path((m, f, h, xd) in energize_case()) {
        // energization only adds acceleration along ẋ
        let e = energize_value(&h, &m, &f, &xd).unwrap();
        let acc = e.acceleration().unwrap();
        let diff = acc + &h;
        let along = diff.dot(&xd) / xd.norm_squared();
        let perpendicular = &diff - &xd * along;
        prop_assert!(perpendicular.amax() <= 1e-8 * (1.0 + diff.amax()));
    }

    #[test]
    fn pullback_matches_oracle(n in 1usize..=3, q_dim in 1usize..=5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_spd(&mut r, n);
        let f = random_vec(&mut r, n, 1.0);
        let j = random_mat(&mut r, n, q_dim, 1.0);
        let jdq = random_vec(&mut r, n, 1.0);
        let p = pullback_value(&j, &jdq, &SpecValue::new(m.clone(), f.clone()));
        let oracle = pullback_oracle(&dense(&j), &col(&jdq), &dense(&m), &col(&f));
        prop_assert!(max_err(&p.m, &p.f, &oracle) <= 1e-10);
        // pulled metrics stay symmetric
        prop_assert!((&p.m - p.m.transpose()).amax() <= 1e-12);
    }

    #[test]
    fn dynamic_pullback_matches_oracle(n in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_spd(&mut r, n);
        let f = random_vec(&mut r, n, 1.0);
        let a = random_vec(&mut r, n, 1.0);
        let d = dynamic_pullback_value(SpecValue::new(m.clone(), f.clone()), &a);
        let oracle = dynamic_pullback_oracle(&dense(&m), &col(&f), &col(&a));
        prop_assert!(max_err(&d.m, &d.f, &oracle) <= 1e-10);
    }

    #[test]
    fn summation_is_commutative_and_matches_oracle(n in 1usize..=4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = SpecValue::new(random_spd(&mut r, n), random_vec(&mut r, n, 1.0));
        let b = SpecValue::new(random_spd(&mut r, n), random_vec(&mut r, n, 1.0));
        let ab = sum_value(&a, &b).unwrap();
        let ba = sum_value(&b, &a).unwrap();
        prop_assert_eq!(&ab, &ba);
        let oracle = sum_oracle((&dense(&a.m), &col(&a.f)), (&dense(&b.m), &col(&b.f)));
        prop_assert!(max_err(&ab.m, &ab.f, &oracle) <= 1e-10);
    }

    #[test]
    fn barrier_geometry_is_degree_two(gain in 0.01..2.0f64, d in 0.01..2.0f64, dd in -3.0..3.0f64, alpha in 0.1..10.0f64) {
        for (g, _) in [avoidance_geometry(gain).unwrap(), limit_geometry(gain).unwrap()] {
            let err = g.homogeneity_error(&Vector::from_element(1, d), &Vector::from_element(1, dd), alpha);
            prop_assert!(err <= 1e-9);
        }
    }

    #[test]
    fn barrier_never_pulls_toward_contact(gain in 0.01..2.0f64, d in 0.01..2.0f64, dd in -3.0..3.0f64) {
        // ẍ = -h ≥ 0 on the clearance coordinate
        prop_assert!(barrier_h(gain, d, dd) <= 0.0);
    }
}

#[test]
fn barrier_examples() {
    assert_eq!(barrier_h(1.0, 1.0, 0.5), 0.0);
    assert!((barrier_h(1.0, 0.5, -1.0) + 4.0).abs() < 1e-15);
    // margin 0.1 rad closing at 1 rad/s
    assert!((barrier_h(1.0, 0.1, -1.0) + 100.0).abs() < 1e-12);
    let h = |dd: f64| barrier_h(0.3, 0.4, dd);
    assert!((h(-1.4) - 4.0 * h(-0.7)).abs() < 1e-12);
}

#[test]
fn energize_of_avoidance_leaf_is_evaluable_everywhere_off_contact() {
    let (g, l) = avoidance_geometry(0.05).unwrap();
    let leaf = energize(&g, &l).unwrap();
    for d in [1e-4, 0.01, 0.5, 3.0] {
        for dd in [-2.0, -1e-9, 0.0, 1e-9, 2.0] {
            let v = leaf
                .eval(&Vector::from_element(1, d), &Vector::from_element(1, dd))
                .unwrap();
            assert!(v.m[(0, 0)].is_finite() && v.f[0].is_finite());
        }
    }
}

#[test]
fn sum_all_of_nothing_is_zero() {
    let s = sum_all(2, std::iter::empty::<&Spec>()).unwrap();
    let v = s.eval(&Vector::zeros(2), &Vector::zeros(2)).unwrap();
    assert_eq!(v, SpecValue::zeros(2));
}
