use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skewlab::conjugacy::{intertwining_residual, solve_semiconjugacy, ConjugacyError};
use skewlab::skew::Point;
use skewlab::symbolic::{gibbs_state, BasePotential, ChainSampler, GibbsState};
use skewlab::torus::distance;
use skewlab::SkewSystem64;

fn sample_points(s: &SkewSystem64, n: usize, seed: u64) -> Vec<Point<f64>> {
    let g: GibbsState<f64> = gibbs_state(s.base(), &BasePotential::zero(s.base())).unwrap();
    let sampler = ChainSampler::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| s.sample_point(&sampler, &mut rng)).collect()
}

#[test]
fn undeformed_conjugacy_is_the_identity() {
    let s = SkewSystem64::standard();
    let flat = s.with_fibers(s.fibers().undeformed()).unwrap();
    let h = solve_semiconjugacy(&flat, 40, 64).unwrap();
    let pts = sample_points(&flat, 200, 1);
    assert!(intertwining_residual(&h, &pts).unwrap() < 1e-12);
    for p in &pts {
        assert_eq!(distance(h.apply(p).unwrap().fiber, p.fiber), 0.0);
        assert_eq!(h.preimage_scan(p, 1e-4).unwrap().diameter, 0.0);
    }
}

#[test]
fn residual_at_forty_terms() {
    let s = SkewSystem64::standard();
    let h = solve_semiconjugacy(&s, 40, 64).unwrap();
    let pts = sample_points(&s, 1000, 2);
    assert!(intertwining_residual(&h, &pts).unwrap() <= 1e-6);
}

#[test]
fn residual_does_not_grow_with_more_terms() {
    let s = SkewSystem64::standard();
    let pts = sample_points(&s, 300, 3);
    let r: Vec<f64> = [20, 40, 60]
        .iter()
        .map(|&n| intertwining_residual(&solve_semiconjugacy(&s, n, 64).unwrap(), &pts).unwrap())
        .collect();
    assert!(r[1] <= r[0] + 1e-15 && r[2] <= r[1] + 1e-15, "{r:?}");
}

#[test]
fn conjugacy_intertwines_along_orbits() {
    let s = SkewSystem64::standard();
    let h = solve_semiconjugacy(&s, 40, 64).unwrap();
    let l = s.fibers().automorphism();
    for p in sample_points(&s, 50, 4) {
        let mut q = p.clone();
        let mut y = h.apply(&p).unwrap().fiber;
        for _ in 0..5 {
            q = s.apply(&q);
            y = l.apply(y);
        }
        // a residual r grows to at most r (1 + λ_u + … + λ_u^4) after five steps
        assert!(distance(h.apply(&q).unwrap().fiber, y) < 1e-4);
    }
}

#[test]
fn displacement_stays_within_the_bound() {
    let s = SkewSystem64::standard();
    let h = solve_semiconjugacy(&s, 40, 64).unwrap();
    for p in sample_points(&s, 300, 5) {
        let d = distance(h.apply(&p).unwrap().fiber, p.fiber);
        assert!(d <= h.displacement_bound() + 1e-12);
    }
}

#[test]
fn fixed_point_is_mapped_to_the_linear_fixed_point() {
    let s = SkewSystem64::standard();
    let h = solve_semiconjugacy(&s, 40, 64).unwrap();
    let p = s.fixed_point();
    assert!(distance(h.apply(&p).unwrap().fiber, [0.0, 0.0]) < 1e-12);
}

#[test]
fn conjugacy_is_continuous_in_the_amplitude() {
    let s = SkewSystem64::standard();
    let beta = s.fibers().beta_max();
    let near = s.with_fibers(s.fibers().with_beta_max(beta * 1.001).unwrap()).unwrap();
    let h = solve_semiconjugacy(&s, 40, 64).unwrap();
    let h2 = solve_semiconjugacy(&near, 40, 64).unwrap();
    let worst = sample_points(&s, 300, 6)
        .iter()
        .map(|p| distance(h.apply(p).unwrap().fiber, h2.apply(p).unwrap().fiber))
        .fold(0.0, f64::max);
    assert!(worst <= 1e-2, "{worst}");
}

#[test]
fn preimages_solve_the_leaf_equation() {
    let s = SkewSystem64::standard();
    let h = solve_semiconjugacy(&s, 40, 64).unwrap();
    for z in sample_points(&s, 100, 7) {
        let w = h.invert_on_leaf(&z).unwrap();
        assert!(distance(h.apply(&w).unwrap().fiber, z.fiber) < 1e-9);
    }
}

#[test]
fn bad_truncations_are_rejected() {
    let s = SkewSystem64::standard();
    assert!(matches!(solve_semiconjugacy(&s, 0, 64), Err(ConjugacyError::NoTerms)));
    let too_many = s.window() + 1;
    assert!(matches!(
        solve_semiconjugacy(&s, too_many, 64),
        Err(ConjugacyError::TermsExceedWindow { .. })
    ));
}
