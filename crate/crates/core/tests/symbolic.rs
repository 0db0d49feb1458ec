use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skewlab::symbolic::{
    cylinder_measure, entropy_markov, gibbs_state, pressure_exact, BasePotential, ChainSampler, Cylinder,
    GibbsState, SymbolicBase, SymbolicError,
};

fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// `(1/n) log Σ exp(S_n φ)` over admissible period-`n` words, with `φ` read on
/// the cyclic window `[-r, r]`.
fn periodic_pressure(base: &SymbolicBase, phi: &BasePotential<f64>, n: usize) -> f64 {
    let r = phi.window_radius();
    let k = base.alphabet();
    let mut sums = Vec::new();
    let mut word = vec![0u8; n];
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        for s in word.iter_mut() {
            *s = (c % k) as u8;
            c /= k;
        }
        if !(0..n).all(|i| base.allows(word[i], word[(i + 1) % n])) {
            continue;
        }
        let mut s = 0.0;
        for i in 0..n {
            let window: Vec<u8> = (0..=2 * r).map(|j| word[(i + n + j - r) % n]).collect();
            s += phi.value(&window).unwrap();
        }
        sums.push(s);
    }
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max + sums.iter().map(|s| (s - max).exp()).sum::<f64>().ln()) / n as f64
}

#[test]
fn full_shift_zero_potential_has_pressure_log_2() {
    let b = SymbolicBase::full_shift(2);
    let p: f64 = pressure_exact(&b, &BasePotential::zero(&b)).unwrap();
    assert!((p - 2f64.ln()).abs() < 1e-12);
    let g: GibbsState<f64> = gibbs_state(&b, &BasePotential::zero(&b)).unwrap();
    assert!((g.symbol_marginal(0) - 0.5).abs() < 1e-12);
}

#[test]
fn single_precision_matches() {
    let b = SymbolicBase::full_shift(2);
    let p: f32 = pressure_exact(&b, &BasePotential::zero(&b)).unwrap();
    assert!((p - 2f32.ln()).abs() < 1e-5);
}

#[test]
fn golden_mean_entropy_and_parry_measure() {
    let b = SymbolicBase::golden_mean();
    let g: GibbsState<f64> = gibbs_state(&b, &BasePotential::zero(&b)).unwrap();
    let phi = golden_ratio();
    assert!((g.pressure() - phi.ln()).abs() < 1e-10);
    assert!((entropy_markov(&g) - phi.ln()).abs() < 1e-10);
    assert!((g.symbol_marginal(0) - phi * phi / (phi * phi + 1.0)).abs() < 1e-10);
    assert_eq!(g.word_measure(&[1, 1]), 0.0);
}

#[test]
fn reducible_transition_is_rejected() {
    let err = SymbolicBase::new(2, vec![vec![1, 0], vec![0, 1]], 0).unwrap().validate().unwrap_err();
    assert!(matches!(err, SymbolicError::Reducible { .. }));
}

#[test]
fn non_fixed_symbol_is_rejected() {
    let err = SymbolicBase::new(2, vec![vec![1, 1], vec![1, 0]], 1).unwrap_err();
    assert!(matches!(err, SymbolicError::NotFixed(1)));
}

#[test]
fn fixed_point_cylinders_under_the_uniform_measure() {
    let b = SymbolicBase::full_shift(2);
    let g: GibbsState<f64> = gibbs_state(&b, &BasePotential::zero(&b)).unwrap();
    for m in 0..6 {
        let mu = cylinder_measure(&g, &Cylinder::fixed_point(0, m));
        assert!((mu - 2f64.powi(-(2 * m as i32 + 1))).abs() < 1e-15);
    }
    assert_eq!(cylinder_measure(&g, &Cylinder::empty()), 1.0);
}

#[test]
fn inadmissible_cylinder_has_measure_zero() {
    let b = SymbolicBase::golden_mean();
    let g: GibbsState<f64> = gibbs_state(&b, &BasePotential::zero(&b)).unwrap();
    assert_eq!(cylinder_measure(&g, &Cylinder::new(3, vec![0, 1, 1, 0])), 0.0);
}

#[test]
fn sampler_symbol_frequency() {
    let b = SymbolicBase::full_shift(2);
    let g: GibbsState<f64> = gibbs_state(&b, &BasePotential::zero(&b)).unwrap();
    let sampler = ChainSampler::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let run = sampler.sample_forward(1_000_000, &mut rng);
    let freq = run.iter().filter(|&&s| s == 0).count() as f64 / run.len() as f64;
    assert!((freq - 0.5).abs() < 0.002, "frequency {freq}");
}

#[test]
fn markov_sampler_matches_parry_marginal() {
    let b = SymbolicBase::golden_mean();
    let g: GibbsState<f64> = gibbs_state(&b, &BasePotential::zero(&b)).unwrap();
    let sampler = ChainSampler::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let run = sampler.sample_forward(400_000, &mut rng);
    assert!(run.windows(2).all(|w| b.allows(w[0], w[1])));
    let freq = run.iter().filter(|&&s| s == 0).count() as f64 / run.len() as f64;
    let phi = golden_ratio();
    assert!((freq - phi * phi / (phi * phi + 1.0)).abs() < 0.005);
}

#[test]
fn two_sided_samples_are_admissible() {
    let b = SymbolicBase::golden_mean();
    let g: GibbsState<f64> = gibbs_state(&b, &BasePotential::zero(&b)).unwrap();
    let sampler = ChainSampler::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let x = sampler.sample(20, &mut rng);
        assert!(x.covers(-20, 20));
        assert!(b.is_admissible(&x.window(-20, 20)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_block_pressure_is_log_sum_exp(a in -3.0f64..3.0, c in -3.0f64..3.0) {
        let b = SymbolicBase::full_shift(2);
        let phi = BasePotential::one_block(&b, &[a, c]);
        let p = pressure_exact(&b, &phi).unwrap();
        prop_assert!((p - (a.exp() + c.exp()).ln()).abs() < 1e-10);
    }

    #[test]
    fn constant_shift_moves_pressure_and_keeps_the_measure(
        vals in prop::collection::vec(-2.0f64..2.0, 8),
        c in -5.0f64..5.0,
    ) {
        let b = SymbolicBase::full_shift(2);
        let phi = BasePotential::from_fn(&b, 1, |w| vals[(w[0] * 4 + w[1] * 2 + w[2]) as usize]);
        let g = gibbs_state(&b, &phi).unwrap();
        let gc = gibbs_state(&b, &phi.shifted(c)).unwrap();
        prop_assert!((gc.pressure() - g.pressure() - c).abs() < 1e-9);
        for w in b.admissible_words(3) {
            prop_assert!((gc.word_measure(&w) - g.word_measure(&w)).abs() < 1e-10);
        }
    }

    #[test]
    fn cylinder_measures_are_consistent_and_stationary(
        vals in prop::collection::vec(-2.0f64..2.0, 5),
        word in prop::collection::vec(0u8..2, 1..6),
    ) {
        let b = SymbolicBase::golden_mean();
        let phi = BasePotential::from_fn(&b, 1, |w| vals[(w[0] * 4 + w[1] * 2 + w[2]) as usize % vals.len()]);
        let g = gibbs_state(&b, &phi).unwrap();
        let mu = g.word_measure(&word);
        let right: f64 = (0..2u8).map(|a| { let mut w = word.clone(); w.push(a); g.word_measure(&w) }).sum();
        let left: f64 = (0..2u8).map(|a| { let mut w = vec![a]; w.extend(&word); g.word_measure(&w) }).sum();
        prop_assert!((right - mu).abs() < 1e-12);
        prop_assert!((left - mu).abs() < 1e-12);
    }

    #[test]
    fn variational_identity(vals in prop::collection::vec(-2.0f64..2.0, 8)) {
        let b = SymbolicBase::full_shift(2);
        let phi = BasePotential::from_fn(&b, 1, |w| vals[(w[0] * 4 + w[1] * 2 + w[2]) as usize]);
        let g = gibbs_state(&b, &phi).unwrap();
        prop_assert!((entropy_markov(&g) + g.potential_mean() - g.pressure()).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pressure_matches_periodic_orbit_sums(vals in prop::collection::vec(-1.0f64..1.0, 8), golden in any::<bool>()) {
        let b = if golden { SymbolicBase::golden_mean() } else { SymbolicBase::full_shift(2) };
        let phi = BasePotential::from_fn(&b, 1, |w| vals[(w[0] * 4 + w[1] * 2 + w[2]) as usize]);
        let exact = pressure_exact(&b, &phi).unwrap();
        let brute = periodic_pressure(&b, &phi, 16);
        prop_assert!((exact - brute).abs() < 5e-3, "exact {} brute {}", exact, brute);
    }
}
