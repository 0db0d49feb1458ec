use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skewlab::pressure::{
    birkhoff_sum, bowen_ball_diameter, pressure_table, separated_pressure, separated_set, PressureError,
    PressureOptions,
};
use skewlab::skew::{Point, ProductPotential};
use skewlab::symbolic::{gibbs_state, BasePotential, BaseWord, ChainSampler, GibbsState, SymbolicBase};
use skewlab::SkewSystem64;

fn sample_points(s: &SkewSystem64, n: usize, seed: u64) -> Vec<Point<f64>> {
    let g: GibbsState<f64> = gibbs_state(s.base(), &BasePotential::zero(s.base())).unwrap();
    let sampler = ChainSampler::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| s.sample_point(&sampler, &mut rng)).collect()
}

fn first_fiber_coordinate(p: &Point<f64>) -> f64 {
    p.fiber[0]
}

#[test]
fn birkhoff_sum_of_a_constant() {
    let s = SkewSystem64::standard();
    let p = s.fixed_point();
    let c = ProductPotential::constant(s.base(), 0.7);
    assert!((birkhoff_sum(&s, &c, &p, 10) - 7.0).abs() < 1e-12);
}

#[test]
fn birkhoff_sum_of_a_symbol_indicator_counts_visits() {
    let s = SkewSystem64::standard();
    let b = SymbolicBase::full_shift(2);
    let phi = ProductPotential::new(BasePotential::one_block(&b, &[1.0, 0.0]), 0.0);
    let p = sample_points(&s, 1, 9).remove(0);
    let visits = p.base.window(0, 19).iter().filter(|&&a| a == 0).count() as f64;
    assert_eq!(birkhoff_sum(&s, &phi, &p, 20), visits);
}

#[test]
fn singleton_when_the_scale_exceeds_the_diameter() {
    let s = SkewSystem64::standard();
    let pts = sample_points(&s, 50, 1);
    // ε = 1 resolves no base symbols and every fiber distance is below 1
    let set = separated_set(&s, &first_fiber_coordinate, &pts, 1.0, 1).unwrap();
    assert_eq!(set.members, vec![0]);
    assert!((set.log_sum - pts[0].fiber[0]).abs() < 1e-15);
}

#[test]
fn empty_cloud_is_an_error() {
    let s = SkewSystem64::standard();
    let zero = |_: &Point<f64>| 0.0;
    assert!(matches!(separated_set(&s, &zero, &[], 0.1, 3), Err(PressureError::EmptyCloud)));
    let opts = PressureOptions { eps_ladder: vec![], ..PressureOptions::default() };
    let err = pressure_table(&s, &ProductPotential::zero(s.base()), &opts).unwrap_err();
    assert_eq!(err.to_string(), "sample cloud empty");
}

#[test]
fn bad_scales_are_errors() {
    let s = SkewSystem64::standard();
    let zero = |_: &Point<f64>| 0.0;
    let pts = sample_points(&s, 5, 1);
    assert!(matches!(separated_set(&s, &zero, &pts, 0.0, 3), Err(PressureError::Scale(_))));
    assert!(matches!(separated_set(&s, &zero, &pts, 0.1, 0), Err(PressureError::ZeroLength)));
}

#[test]
fn base_only_separation_grows_like_log_2() {
    // all base words on [-r, n-1+r] with the fixed fiber point: only the base separates
    let s = SkewSystem64::standard();
    let flat = s.with_fibers(s.fibers().undeformed()).unwrap();
    let eps = 0.125;
    let r = 2;
    let zero = |_: &Point<f64>| 0.0;
    let mut values = Vec::new();
    for n in 3..=8 {
        let len = n + 2 * r;
        let cloud: Vec<Point<f64>> = flat
            .base()
            .admissible_words(len)
            .into_iter()
            .map(|w| Point::new(BaseWord::new(w, r), [0.0, 0.0]))
            .collect();
        values.push(separated_pressure(&flat, &zero, &cloud, eps, n).unwrap());
    }
    let slope = (values[5] - values[0]) / 5.0;
    assert!((slope - 2f64.ln()).abs() / 2f64.ln() < 0.1, "{slope}");
}

#[test]
fn undeformed_table_matches_the_product_entropy() {
    let s = SkewSystem64::standard();
    let flat = s.with_fibers(s.fibers().undeformed()).unwrap();
    let opts = PressureOptions {
        eps_ladder: vec![0.25, 0.125],
        n_max: 10,
        cloud_budget: 20_000,
        ..PressureOptions::default()
    };
    let est = pressure_table(&flat, &ProductPotential::zero(flat.base()), &opts).unwrap();
    let target = 2f64.ln() + flat.fibers().automorphism().lambda_u().ln();
    assert!((est.extrapolated - target).abs() / target < 0.15, "{} vs {target}", est.extrapolated);
    assert!(est.to_csv().starts_with("eps,n,count,log_sum,slope\n"));
}

#[test]
fn bowen_balls_shrink_with_the_time_window() {
    let s = SkewSystem64::standard();
    for p in [s.fixed_point(), sample_points(&s, 1, 3).remove(0)] {
        let d: Vec<f64> = [1, 3, 6]
            .iter()
            .map(|&k| bowen_ball_diameter(&s, &p, 0.1, k).unwrap())
            .collect();
        assert!(d[0] <= 2.0 * 0.1 * 2f64.sqrt() + 1e-12);
        assert!(d[1] <= d[0] + 1e-9 && d[2] <= d[1] + 1e-9, "{d:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn birkhoff_sums_form_a_cocycle(seed in 0u64..1000, n in 1usize..15, m in 1usize..15) {
        let s = SkewSystem64::standard();
        let p = sample_points(&s, 1, seed).remove(0);
        let mut q = p.clone();
        for _ in 0..n {
            q = s.apply(&q);
        }
        let f = first_fiber_coordinate;
        let whole = birkhoff_sum(&s, &f, &p, n + m);
        let split = birkhoff_sum(&s, &f, &p, n) + birkhoff_sum(&s, &f, &q, m);
        prop_assert!((whole - split).abs() < 1e-9);
    }

    #[test]
    fn constant_shift_adds_n_c(seed in 0u64..1000, n in 1usize..6, c in -3.0f64..3.0) {
        let s = SkewSystem64::standard();
        let pts = sample_points(&s, 40, seed);
        let f = first_fiber_coordinate;
        let g = move |p: &Point<f64>| p.fiber[0] + c;
        let a = separated_pressure(&s, &f, &pts, 0.125, n).unwrap();
        let b = separated_pressure(&s, &g, &pts, 0.125, n).unwrap();
        prop_assert!((b - a - n as f64 * c).abs() < 1e-9);
    }

    #[test]
    fn separation_is_inherited_by_finer_scales_and_prefixes(seed in 0u64..1000, n in 1usize..5, extra in 1usize..40) {
        let s = SkewSystem64::standard();
        let pts = sample_points(&s, 40 + extra, seed);
        let zero = |_: &Point<f64>| 0.0;
        let coarse = separated_set(&s, &zero, &pts, 0.25, n).unwrap().members;
        let kept: Vec<Point<f64>> = coarse.iter().map(|&i| pts[i].clone()).collect();
        let refined = separated_set(&s, &zero, &kept, 0.125, n).unwrap().members;
        prop_assert_eq!(refined.len(), kept.len());
        let prefix = separated_set(&s, &zero, &pts[..40], 0.125, n).unwrap().members;
        let full = separated_set(&s, &zero, &pts, 0.125, n).unwrap().members;
        prop_assert!(full.starts_with(&prefix));
    }
}
