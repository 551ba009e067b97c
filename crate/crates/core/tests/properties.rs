use std::f64::consts::{FRAC_PI_2, PI};

use jointmeas::oracle::oracle_worst_case_error;
use jointmeas::povm::joint_measurability_h;
use jointmeas::protocol::reconstruction_residual;
use jointmeas::tradeoff::curve_errors;
use jointmeas::{
    classify, commuting_povm, curve_tangent, decompose, lower_bound_gap, optimal_construction,
    optimal_point, phi_for_error_a, score_povm, BlochVector, ErrorPair, ObservablePair, Region,
    SharpDirection,
};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = SharpDirection> {
    (-1.0f64..1.0, 0.0..2.0 * PI).prop_map(|(z, az): (f64, f64)| {
        let rho = (1.0 - z * z).sqrt();
        SharpDirection::from_unnormalized(BlochVector::new(rho * az.cos(), rho * az.sin(), z))
            .unwrap()
    })
}

/// Pairs of directions that are not (nearly) parallel.
fn pair() -> impl Strategy<Value = ObservablePair> {
    (unit(), unit())
        .prop_map(|(a, b)| ObservablePair::new(a, b))
        .prop_filter("commuting pair", |p| p.sin_theta() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn construction_hits_curve_for_any_orientation(p in pair(), phi in 0.0..FRAC_PI_2) {
        let k = optimal_construction(&p, phi).unwrap();
        let e = k.povm.errors(&p);
        let (ea, eb) = curve_errors(p.sin_theta(), phi);
        prop_assert!((e.eps_a - ea).abs() < 1e-10);
        prop_assert!((e.eps_b - eb).abs() < 1e-10);
        prop_assert!(k.povm.min_eigenvalue() > -1e-10);
        prop_assert!(k.povm.completeness_residual() < 1e-12);
        prop_assert!((joint_measurability_h(&k.m, &k.n) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn decomposition_reassembles(p in pair(), phi in 0.0..FRAC_PI_2) {
        let povm = optimal_construction(&p, phi).unwrap().povm;
        let proto = decompose(&povm).unwrap();
        prop_assert!(reconstruction_residual(&povm, &proto.reassemble()) < 1e-12);
        prop_assert!((proto.p_plus + proto.p_minus - 1.0).abs() < 1e-15);
    }

    #[test]
    fn curve_points_sit_on_the_boundary(theta in 0.01..PI - 0.01, phi in 0.0..FRAC_PI_2) {
        let pt = optimal_point(theta, phi).unwrap();
        let c = classify(theta, &pt.errors()).unwrap();
        prop_assert_eq!(c.region, Region::Boundary);
        prop_assert!(lower_bound_gap(theta, &pt.errors(), phi).abs() < 1e-12);
    }

    #[test]
    fn shrinking_a_boundary_point_is_forbidden(theta in 0.1..PI - 0.1, phi in 0.05..FRAC_PI_2 - 0.05) {
        let pt = optimal_point(theta, phi).unwrap();
        let inside = ErrorPair::new(pt.e_a * 0.99, pt.e_b * 0.99).unwrap();
        let outside = ErrorPair::new((pt.e_a + 0.01).min(2.0), (pt.e_b + 0.01).min(2.0)).unwrap();
        prop_assert_eq!(classify(theta, &inside).unwrap().region, Region::Forbidden);
        prop_assert_eq!(classify(theta, &outside).unwrap().region, Region::Interior);
    }

    #[test]
    fn phi_inversion_round_trips(theta in 0.01..PI - 0.01, phi in 0.0..FRAC_PI_2) {
        let pt = optimal_point(theta, phi).unwrap();
        let back = phi_for_error_a(theta, pt.e_a).unwrap();
        prop_assert!((optimal_point(theta, back).unwrap().e_a - pt.e_a).abs() < 1e-12);
    }

    #[test]
    fn tangent_slope_is_minus_tan_phi(theta in 0.05..FRAC_PI_2, phi in 0.05..FRAC_PI_2 - 0.05) {
        let t = curve_tangent(theta, phi).unwrap();
        prop_assert!((t.d_eb_d_ea + phi.tan()).abs() < 1e-12);
        prop_assert!(t.d_ea_d_sinphi < 0.0);
    }

    #[test]
    fn commuting_route_is_error_free_on_b(theta in 0.01..PI - 0.01, u in 0.0f64..1.0) {
        let p = ObservablePair::canonical(theta).unwrap();
        let eps_a = p.sin_theta() + u * (2.0 - p.sin_theta());
        let povm = commuting_povm(&p, eps_a).unwrap();
        let e = score_povm(&p, &povm);
        prop_assert!((e.eps_a - eps_a).abs() < 1e-10);
        prop_assert!(e.eps_b.abs() < 1e-12);
        prop_assert!(povm.min_eigenvalue() > -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn oracle_agrees_on_constructed_marginals(p in pair(), phi in 0.0..FRAC_PI_2) {
        let povm = optimal_construction(&p, phi).unwrap().povm;
        let mg = povm.marginals();
        let e = povm.errors(&p);
        let oa = oracle_worst_case_error(&p.a, &mg.a_marginal, 1000).unwrap();
        let ob = oracle_worst_case_error(&p.b, &mg.b_marginal, 1000).unwrap();
        prop_assert!((oa - e.eps_a).abs() < 1e-6);
        prop_assert!((ob - e.eps_b).abs() < 1e-6);
    }
}
