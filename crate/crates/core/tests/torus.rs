use proptest::prelude::*;
use skewlab::symbolic::BaseWord;
use skewlab::torus::{build_cat_map, delta, distance, estimate_unstable_field, FiberFamily, FiberSpec, TorusError};
use skewlab::{FiberFamily64, SkewSystem64};

const LAMBDA_U: f64 = 2.618_033_988_749_895;

fn family() -> FiberFamily64 {
    FiberFamily::standard(0)
}

/// A word whose ring depth around the origin is exactly `depth` (capped by `m_in = 2`).
fn word_with_depth(depth: usize) -> BaseWord {
    let mut s = vec![0u8; 21];
    if depth < 3 {
        s[10 - depth] = 1;
    }
    BaseWord::new(s, 10)
}

fn pt() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| [a, b])
}

fn word() -> impl Strategy<Value = BaseWord> {
    prop::collection::vec(prop::sample::select(vec![0u8, 0, 0, 1]), 21).prop_map(|s| BaseWord::new(s, 10))
}

#[test]
fn cat_map_eigenvalues() {
    let l = build_cat_map::<f64>([[2, 1], [1, 1]]).unwrap();
    assert!((l.lambda_u() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!((l.lambda_s() - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!((l.lambda_u() * l.lambda_s() - 1.0).abs() < 1e-12);
}

#[test]
fn shear_is_not_hyperbolic() {
    let err = build_cat_map::<f64>([[1, 1], [0, 1]]).unwrap_err();
    assert!(matches!(err, TorusError::NotHyperbolic { .. }));
}

#[test]
fn negative_stable_eigenvalue_is_rejected() {
    assert!(build_cat_map::<f64>([[0, 1], [1, -1]]).is_err());
}

#[test]
fn center_rate_must_stay_below_lambda_u() {
    let spec = FiberSpec { lambda_c: 2.7, ..FiberSpec::default() };
    assert!(matches!(FiberFamily::<f64>::new(&spec, 0), Err(TorusError::CenterRate { .. })));
}

#[test]
fn theta_is_fixed_by_every_fiber_map() {
    let ff = family();
    for depth in 0..3 {
        let y = ff.fiber_map(&word_with_depth(depth), [0.0, 0.0]);
        assert!(distance(y, [0.0, 0.0]) < 1e-15);
    }
}

#[test]
fn stable_factor_at_the_fixed_point_is_lambda_c() {
    let ff = family();
    let q = BaseWord::constant(0, 10);
    assert!((ff.stable_derivative_factor(&q, [0.0, 0.0]) - 1.2).abs() < 1e-12);
    assert!((ff.beta_max() - (1.2 - 1.0 / LAMBDA_U)).abs() < 1e-12);
}

#[test]
fn amplitude_schedule_by_depth() {
    let ff = family();
    assert_eq!(ff.amplitude(&word_with_depth(0)), 0.0);
    assert_eq!(ff.amplitude(&word_with_depth(1)), 0.0);
    assert!((ff.amplitude(&word_with_depth(2)) - ff.beta_max()).abs() < 1e-15);
}

#[test]
fn zeta_closed_form_matches_grid_minimum() {
    let ff = family();
    for depth in 0..3 {
        let x = word_with_depth(depth);
        let closed = if depth == 2 { 1.0 / 1.2 } else { LAMBDA_U };
        assert!((ff.zeta(&x) - closed).abs() < 1e-12);
        // the grid contains θ, where the slope of ψ is maximal
        assert!((ff.zeta_grid(&x, 64) - closed).abs() < 1e-9);
    }
}

#[test]
fn undeformed_splitting_is_the_linear_one() {
    let s = SkewSystem64::standard();
    let flat = s.with_fibers(s.fibers().undeformed()).unwrap();
    let p = flat.fixed_point();
    let segment: Vec<_> = flat
        .backward_segment(&p, 30)
        .unwrap()
        .into_iter()
        .map(|q| (q.base, q.fiber))
        .collect();
    let est = estimate_unstable_field(flat.fibers(), &segment, 1e-8).unwrap();
    let e_u = flat.fibers().automorphism().e_u();
    let cross = (est.e_u_estimate[0] * e_u[1] - est.e_u_estimate[1] * e_u[0]).abs();
    assert!(cross < 1e-10);
    assert!((est.one_step_expansion - LAMBDA_U).abs() < 1e-10);
    assert!((est.contraction_s - 1.0 / LAMBDA_U).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_round_trip(x in word(), y in pt()) {
        let ff = family();
        let z = ff.fiber_map(&x, y);
        let back = ff.fiber_inverse(&x, z).unwrap();
        prop_assert!(distance(back, y) < 1e-12);
    }

    #[test]
    fn stable_foliation_is_preserved(x in word(), y in pt(), t in -0.3f64..0.3) {
        let ff = family();
        let e_s = ff.automorphism().e_s();
        let y2 = [y[0] + t * e_s[0], y[1] + t * e_s[1]];
        let d = delta(ff.fiber_map(&x, y2), ff.fiber_map(&x, y));
        let (u, _) = ff.automorphism().eigen_coordinates(d);
        prop_assert!(u.abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_differences(x in word(), y in pt()) {
        let ff = family();
        let d = ff.derivative(&x, y);
        let h = 1e-6;
        for k in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[k] += h;
            ym[k] -= h;
            let diff = delta(ff.fiber_map(&x, yp), ff.fiber_map(&x, ym));
            for i in 0..2 {
                prop_assert!((diff[i] / (2.0 * h) - d[i][k]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn stable_factor_bounded_by_lambda_c(x in word(), y in pt()) {
        let ff = family();
        let g = ff.stable_derivative_factor(&x, y);
        prop_assert!(g > 0.0 && g <= 1.2 + 1e-12);
    }
}
