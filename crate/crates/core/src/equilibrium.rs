//! The mostly-contracting condition, the centre Lyapunov exponent, and lifted
//! equilibrium states `μ_{φ∘H} = (H⁻¹)_* ν_φ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conjugacy::{ConjugacyError, SemiConjugacy};
use crate::scalar::{lit, to_f64, Scalar};
use crate::skew::{Point, ProductPotential, SkewError, SkewSystem};
use crate::stability::{MonteCarloIntegrals, WeakStarMetric};
use crate::symbolic::{
    cylinder_measure, gibbs_state, BasePotential, BaseWord, ChainSampler, Cylinder, GibbsState, SymbolicError,
};
use crate::torus::FiberFamily;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Skew(#[from] SkewError),
    #[error(transparent)]
    Conjugacy(#[from] ConjugacyError),
    #[error("potential is outside the mostly-contracting class: ∫ log ζ = {0}")]
    NotMostlyContracting(f64),
    #[error("sample budget must be positive")]
    EmptyBudget,
}

/// `ν(m(x) = j)` for `j = 0..=m_in`, where `m` is the capped match depth.
pub fn depth_class_measures<T: Scalar>(ff: &FiberFamily<T>, g: &GibbsState<T>) -> Vec<T> {
    let (_, m_in) = ff.region_depths();
    let q = ff.fixed_symbol();
    // ν(m ≥ j) = ν(C_{j-1}) for j ≥ 1
    let at_least = |j: usize| {
        if j == 0 {
            T::one()
        } else {
            cylinder_measure(g, &Cylinder::fixed_point(q, j - 1))
        }
    };
    (0..=m_in)
        .map(|j| {
            if j == m_in {
                at_least(j)
            } else {
                at_least(j) - at_least(j + 1)
            }
        })
        .collect()
}

/// `∫ log ζ d(π₁)_* ν` as a finite sum over depth classes.
pub fn mostly_contracting_integral<T: Scalar>(ff: &FiberFamily<T>, g: &GibbsState<T>) -> T {
    depth_class_measures(ff, g)
        .into_iter()
        .enumerate()
        .map(|(j, mu)| mu * ff.zeta_at_depth(j).ln())
        .sum()
}

/// Sample mean with a batch-means standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonteCarloMean {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MonteCarloMean {
    /// Batch means over `batches` consecutive blocks, which accounts for
    /// correlation along a single orbit.
    pub fn from_series(values: &[f64], batches: usize) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let b = batches.clamp(2, n.max(2));
        let size = n / b;
        let std_error = if size == 0 {
            0.0
        } else {
            let means: Vec<f64> = values
                .chunks(size)
                .take(b)
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect();
            let mm = means.iter().sum::<f64>() / means.len() as f64;
            let var = means.iter().map(|m| (m - mm) * (m - mm)).sum::<f64>() / (means.len() - 1) as f64;
            (var / means.len() as f64).sqrt()
        };
        Self {
            mean,
            std_error,
            samples: n,
        }
    }
}

/// Birkhoff average of `log ζ(σ^k x)` along one Gibbs-distributed orbit.
pub fn birkhoff_log_zeta<T: Scalar>(ff: &FiberFamily<T>, g: &GibbsState<T>, steps: usize, seed: u64) -> MonteCarloMean {
    let (_, m_in) = ff.region_depths();
    let pad = m_in;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = ChainSampler::new(g).sample_forward(steps + 2 * pad, &mut rng);
    let x = BaseWord::new(symbols, pad);
    let logs: Vec<f64> = (0..m_in + 1).map(|j| to_f64(ff.zeta_at_depth(j).ln())).collect();
    let values: Vec<f64> = (0..steps as i64)
        .map(|k| logs[x.shifted(k).match_depth(ff.fixed_symbol(), m_in)])
        .collect();
    MonteCarloMean::from_series(&values, 100)
}

/// `ν₀(C_{m_out}) < log λ_u / (log λ_u + log λ_c)`.
#[derive(Clone, Debug, Serialize)]
pub struct H1Check {
    pub passed: bool,
    pub measure: f64,
    pub threshold: f64,
    pub margin: f64,
}

pub fn check_h1<T: Scalar>(ff: &FiberFamily<T>, g0: &GibbsState<T>) -> H1Check {
    let (m_out, _) = ff.region_depths();
    let measure = to_f64(cylinder_measure(g0, &Cylinder::fixed_point(ff.fixed_symbol(), m_out)));
    let lu = to_f64(ff.automorphism().lambda_u().ln());
    let lc = to_f64(ff.lambda_c().ln());
    let threshold = lu / (lu + lc);
    H1Check {
        passed: measure < threshold,
        measure,
        threshold,
        margin: threshold - measure,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassCheck {
    pub in_class: bool,
    /// `∫ log ζ d(π₁)_* ν_φ`.
    pub value: f64,
    pub pressure: f64,
}

/// Membership in the mostly-contracting class; the fiber constant only
/// shifts the pressure.
pub fn check_class_p<T: Scalar>(system: &SkewSystem<T>, phi: &ProductPotential<T>) -> Result<ClassCheck, EquilibriumError> {
    let g = gibbs_state(system.base(), &phi.base_part)?;
    let value = to_f64(mostly_contracting_integral(system.fibers(), &g));
    Ok(ClassCheck {
        in_class: value > 0.0,
        value,
        pressure: to_f64(g.pressure() + phi.fiber_constant)
            + to_f64(system.fibers().automorphism().lambda_u().ln()),
    })
}

/// `(1/n) Σ_{k=1}^{n} -log γ(F^{-k} p)`: finite-`n` lower Lyapunov exponent of
/// `F⁻¹` along `E^s`, with `γ` the stable derivative factor.
pub fn lyapunov_chi<T: Scalar>(system: &SkewSystem<T>, p: &Point<T>, n: usize) -> Result<T, EquilibriumError> {
    let (_, m_in) = system.fibers().region_depths();
    let reach = m_in as i64 - 1;
    system.require_window(p, -(n as i64) - reach, reach)?;
    let ff = system.fibers();
    let mut x = p.base.clone();
    let mut y = p.fiber;
    let mut sum = T::zero();
    for _ in 0..n {
        x = x.shifted(-1);
        let beta = ff.amplitude(&x);
        y = ff.inverse_with_amplitude(beta, y).map_err(SkewError::from)?;
        sum = sum - ff.stable_factor_with_amplitude(beta, y).ln();
    }
    Ok(sum / T::from_usize(n.max(1)).unwrap())
}

#[derive(Clone, Debug, Serialize)]
pub struct SetBEstimate {
    /// Fraction of base samples with `χ > 0` at every grid point.
    pub fraction: f64,
    pub x_samples: usize,
    pub grid: usize,
    pub n: usize,
    pub min_chi: f64,
    pub mean_chi: f64,
}

/// Estimates `ν(B)` for `B = {x : χ(x, y) > 0 ∀y}` on a `grid × grid` fiber
/// lattice anchored at `θ`.
pub fn estimate_set_b<T: Scalar>(
    system: &SkewSystem<T>,
    g: &GibbsState<T>,
    x_samples: usize,
    grid: usize,
    n: usize,
    seed: u64,
) -> Result<SetBEstimate, EquilibriumError> {
    let sampler = ChainSampler::new(g);
    let (_, m_in) = system.fibers().region_depths();
    let theta = system.fibers().theta();
    let per_x: Vec<(bool, f64, f64)> = (0..x_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = sampler.sample(n + m_in, &mut rng);
            let mut all_positive = true;
            let mut min = f64::INFINITY;
            let mut sum = 0.0;
            for a in 0..grid {
                for b in 0..grid {
                    let y = [
                        theta[0] + T::from_usize(a).unwrap() / T::from_usize(grid).unwrap(),
                        theta[1] + T::from_usize(b).unwrap() / T::from_usize(grid).unwrap(),
                    ];
                    let chi = to_f64(lyapunov_chi(system, &Point::new(x.clone(), y), n)?);
                    all_positive &= chi > 0.0;
                    min = min.min(chi);
                    sum += chi;
                }
            }
            Ok((all_positive, min, sum / (grid * grid) as f64))
        })
        .collect::<Result<_, EquilibriumError>>()?;
    let hits = per_x.iter().filter(|r| r.0).count();
    Ok(SetBEstimate {
        fraction: hits as f64 / x_samples.max(1) as f64,
        x_samples,
        grid,
        n,
        min_chi: per_x.iter().fold(f64::INFINITY, |m, r| m.min(r.1)),
        mean_chi: per_x.iter().map(|r| r.2).sum::<f64>() / x_samples.max(1) as f64,
    })
}

/// Samples of `μ_{φ∘H}`: `x ~ ν_{φ₁}`, `y ~ Haar`, returned as `(x, H_x⁻¹(y))`.
#[derive(Clone, Debug)]
pub struct LiftedState<T> {
    pub base_gibbs: GibbsState<T>,
    /// The `(x, y)` draws from `ν_φ`.
    pub draws: Vec<Point<T>>,
    /// Their lifts.
    pub samples: Vec<Point<T>>,
    pub seed: u64,
}

/// Per-function comparison of two Monte-Carlo (or exact) means.
#[derive(Clone, Debug, Serialize)]
pub struct ZScore {
    pub index: usize,
    pub difference: f64,
    pub sigma: f64,
    pub passed: bool,
}

impl ZScore {
    fn new(index: usize, difference: f64, sigma: f64, k: f64) -> Self {
        Self {
            index,
            difference,
            sigma,
            passed: difference.abs() <= k * sigma || difference.abs() <= 1e-12,
        }
    }

    pub fn z(&self) -> f64 {
        if self.sigma > 0.0 {
            self.difference.abs() / self.sigma
        } else if self.difference.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Draws `budget` lifted samples; sample `i` uses the ChaCha8 stream `i` of `seed`.
pub fn lift_equilibrium<T: Scalar>(
    system: &SkewSystem<T>,
    h: &SemiConjugacy<T>,
    phi: &ProductPotential<T>,
    budget: usize,
    seed: u64,
) -> Result<LiftedState<T>, EquilibriumError> {
    if budget == 0 {
        return Err(EquilibriumError::EmptyBudget);
    }
    let class = check_class_p(system, phi)?;
    if !class.in_class {
        return Err(EquilibriumError::NotMostlyContracting(class.value));
    }
    let g = gibbs_state(system.base(), &phi.base_part)?;
    let sampler = ChainSampler::new(&g);
    let pairs: Vec<(Point<T>, Point<T>)> = (0..budget)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = sampler.sample(system.window(), &mut rng);
            let y = [lit::<T>(rng.gen::<f64>()), lit::<T>(rng.gen::<f64>())];
            let draw = Point::new(x, y);
            let lift = h.invert_on_leaf(&draw)?;
            Ok((draw, lift))
        })
        .collect::<Result<_, ConjugacyError>>()?;
    let (draws, samples) = pairs.into_iter().unzip();
    Ok(LiftedState {
        base_gibbs: g,
        draws,
        samples,
        seed,
    })
}

impl<T: Scalar> LiftedState<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Monte-Carlo integrals of the dictionary under the lifted state.
    pub fn integrals(&self, metric: &WeakStarMetric) -> MonteCarloIntegrals {
        metric.monte_carlo(&self.samples)
    }

    /// `E_lift[f ∘ H]` against the exact `E_ν[f]`, per dictionary function.
    pub fn pushforward_check(
        &self,
        h: &SemiConjugacy<T>,
        metric: &WeakStarMetric,
        k_sigma: f64,
    ) -> Result<Vec<ZScore>, EquilibriumError> {
        let pushed: Vec<Point<T>> = self
            .samples
            .par_iter()
            .map(|p| h.apply(p))
            .collect::<Result<_, _>>()?;
        let mc = metric.monte_carlo(&pushed);
        let exact = metric.exact_gibbs_haar(&self.base_gibbs, h.system().base().fixed_symbol());
        Ok((0..metric.len())
            .map(|j| ZScore::new(j, mc.means[j] - exact[j], mc.std_errors[j], k_sigma))
            .collect())
    }

    /// `E_lift[f ∘ F] - E_lift[f]` with the paired standard error.
    pub fn invariance_check(&self, system: &SkewSystem<T>, metric: &WeakStarMetric, k_sigma: f64) -> Vec<ZScore> {
        let images: Vec<Point<T>> = self.samples.par_iter().map(|p| system.apply(p)).collect();
        metric
            .paired_differences(&images, &self.samples)
            .into_iter()
            .enumerate()
            .map(|(j, (d, se))| ZScore::new(j, d, se, k_sigma))
            .collect()
    }
}

/// Lifted-state diagnostics bundled for reports.
#[derive(Clone, Debug, Serialize)]
pub struct LiftReport {
    pub budget: usize,
    pub pushforward_max_z: f64,
    pub pushforward_passed: bool,
    pub invariance_max_z: f64,
    pub invariance_passed: bool,
}

pub fn lift_report<T: Scalar>(
    system: &SkewSystem<T>,
    h: &SemiConjugacy<T>,
    lifted: &LiftedState<T>,
    metric: &WeakStarMetric,
) -> Result<LiftReport, EquilibriumError> {
    let push = lifted.pushforward_check(h, metric, 3.0)?;
    let inv = lifted.invariance_check(system, metric, 3.0);
    let max_z = |v: &[ZScore]| v.iter().map(ZScore::z).fold(0.0, f64::max);
    Ok(LiftReport {
        budget: lifted.len(),
        pushforward_max_z: max_z(&push),
        pushforward_passed: push.iter().all(|z| z.passed),
        invariance_max_z: max_z(&inv),
        invariance_passed: inv.iter().all(|z| z.passed),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SingletonRate {
    pub rate: f64,
    pub samples: usize,
    pub leaf_resolution: f64,
    pub max_diameter: f64,
}

/// Fraction of `ν ⊗ Haar`-random `z` whose preimage arc `H⁻¹(z)` is shorter
/// than `leaf_resolution`.
pub fn preimage_singleton_rate<T: Scalar>(
    h: &SemiConjugacy<T>,
    g: &GibbsState<T>,
    samples: usize,
    leaf_resolution: T,
    seed: u64,
) -> Result<SingletonRate, EquilibriumError> {
    if samples == 0 {
        return Err(EquilibriumError::EmptyBudget);
    }
    let sampler = ChainSampler::new(g);
    let window = h.system().window();
    let diameters: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = sampler.sample(window, &mut rng);
            let y = [lit::<T>(rng.gen::<f64>()), lit::<T>(rng.gen::<f64>())];
            Ok(to_f64(h.preimage_scan(&Point::new(x, y), leaf_resolution)?.diameter))
        })
        .collect::<Result<_, ConjugacyError>>()?;
    let res = to_f64(leaf_resolution);
    Ok(SingletonRate {
        rate: diameters.iter().filter(|&&d| d < res).count() as f64 / samples as f64,
        samples,
        leaf_resolution: res,
        max_diameter: diameters.iter().copied().fold(0.0, f64::max),
    })
}

/// The potential `a` on `[x_0 = q̄]`, `b` elsewhere.
pub fn fixed_symbol_potential<T: Scalar>(system: &SkewSystem<T>, a: T, b: T) -> BasePotential<T> {
    let q = system.base().fixed_symbol();
    BasePotential::from_fn(system.base(), 0, |w| if w[0] == q { a } else { b })
}
