use loghardy_core::analysis::{
    radial_lemma_check, scaling_family_quotient, sobolev_constant_estimate, test_function_bound_l,
    theoretical_exponent, DescentOptions,
};
use loghardy_core::assembly::{constraint_vector, hardy_mass, stiffness};
use loghardy_core::eigensolve::{second_neumann_eigen, EigOptions};
use loghardy_core::geometry::{build_mesh, DomainSpec, Point};
use loghardy_core::weights::{admissible_check, muckenhoupt_s, WeightParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn critical_scaling_family_is_invariant(
        lambda in 1e-4..1.0f64,
        b in -0.9..0.9f64,
        p in 2.0..6.0f64,
        a in 1.05..5.0f64,
    ) {
        let params = WeightParams { scale: a, mass_exponent: 0.0, gradient_exponent: b, power: p, far_field_exponent: 1.0 }
            .with_mass_offset(0.0);
        let unit = scaling_family_quotient(1.0, &params).unwrap();
        let scaled = scaling_family_quotient(lambda, &params).unwrap();
        prop_assert!((scaled - unit).abs() <= 1e-9 * unit, "{} vs {}", scaled, unit);
    }

    #[test]
    fn exponent_is_increasing_and_bounded(x in 0.0..0.25f64, y in 0.0..0.25f64) {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        let (alo, ahi) = (theoretical_exponent(lo).unwrap(), theoretical_exponent(hi).unwrap());
        prop_assert!(alo <= ahi);
        prop_assert!((0.0..=0.5).contains(&alo) && ahi <= 0.5);
    }

    #[test]
    fn muckenhoupt_quantity_is_at_least_one(
        d in 0.0..2.0f64,
        r in 1e-4..2.0f64,
        b in 0.0..0.9f64,
        gamma in 0.2..1.8f64,
    ) {
        let params = WeightParams { scale: 2.0, mass_exponent: 2.0, gradient_exponent: b, power: 2.0, far_field_exponent: gamma };
        // Cauchy–Schwarz: the product of the averages of ω and 1/ω is at least one.
        prop_assert!(muckenhoupt_s(Point([d, 0.0]), r, &params).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn admissibility_integral_grows_with_the_radius(a in 1.001..1.5f64, l1 in 0.05..0.95f64, l2 in 0.05..0.95f64) {
        let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        prop_assume!(hi - lo > 1e-6);
        prop_assert!(admissible_check(a, lo).unwrap().integral < admissible_check(a, hi).unwrap().integral);
    }
}

#[test]
fn radial_lemma_check_is_reproducible() {
    let first = radial_lemma_check(50, 2.0, 0.2, 11).unwrap();
    let second = radial_lemma_check(50, 2.0, 0.2, 11).unwrap();
    assert_eq!(first, second);
    assert!(first.max_ratio.is_finite() && first.max_ratio > 0.0);
    let other = radial_lemma_check(50, 2.0, 0.2, 12).unwrap();
    assert_ne!(first.max_ratio, other.max_ratio);
}

#[test]
fn linear_test_function_bounds_the_eigenvalue_from_above() {
    for (a, l, amp) in [(1.01, 0.9, 1.0), (1.05, 0.7, 0.6), (1.3, 0.5, 0.8)] {
        let mesh = build_mesh(&DomainSpec::LDomain { l, bump_angle: 0.4, bump_amplitude: amp }, 0.08, 0.5, 10).unwrap();
        let k = stiffness(&mesh).unwrap();
        let m = hardy_mass(&mesh, a).unwrap();
        let w = constraint_vector(&mesh, a).unwrap();
        let eig = second_neumann_eigen(&k, &m, &w, &EigOptions::default()).unwrap();
        let bound = test_function_bound_l(&mesh, a).unwrap();
        assert!(eig.converged);
        assert!(bound.quotient >= eig.lambda - 1e-8, "a = {a}: {} < {}", bound.quotient, eig.lambda);
        assert!(bound.quotient <= bound.chain_value);
    }
}

#[test]
fn sobolev_estimates_decrease_in_the_exponent_of_the_gradient_weight() {
    // With log(a/r) ≥ 1 on the disk, a larger B enlarges the numerator.
    let mesh = build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.15, 0.5, 8).unwrap();
    let run = |b: f64| {
        let params = WeightParams { scale: std::f64::consts::E, mass_exponent: 2.0 - b, gradient_exponent: b, power: 2.0, far_field_exponent: 1.0 };
        let est = sobolev_constant_estimate(&mesh, &params, true, &DescentOptions::default()).unwrap();
        assert!(est.converged);
        assert!(est.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        est.c_estimate
    };
    let (low, high) = (run(-0.5), run(0.5));
    assert!(low > 0.0 && high > 0.0);
}
