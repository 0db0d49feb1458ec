//! Weak* distances between measures on `Λ × T²` and stability curves under
//! potential and fiber-family perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cell::RefCell;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::conjugacy::{solve_semiconjugacy, ConjugacyError};
use crate::equilibrium::{check_class_p, lift_equilibrium, mostly_contracting_integral, EquilibriumError, LiftedState};
use crate::scalar::{lit, to_f64, Scalar};
use crate::skew::{Point, ProductPotential, SkewError, SkewSystem, ValidationOptions};
use crate::symbolic::{cylinder_measure, gibbs_state, BasePotential, Cylinder, GibbsState, SymbolicError};
use crate::torus::{FiberFamily, TorusError};

/// Bumped whenever the dictionary changes.
pub const DICTIONARY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Skew(#[from] SkewError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Conjugacy(#[from] ConjugacyError),
    #[error("perturbed potential at t = {t} leaves the mostly-contracting class (∫ log ζ = {value})")]
    LeavesClass { t: f64, value: f64 },
    #[error("perturbed system at {parameter} = {value} fails validation")]
    InvalidPerturbation { parameter: String, value: f64 },
    #[error("empty ladder")]
    EmptyLadder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BaseFactor {
    One,
    /// `[x_i = q̄]`.
    SymbolAt(i8),
    /// `[x_{-m} … x_m = q̄ … q̄]`.
    FixedCylinder(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FiberFactor {
    One,
    Cos([i8; 2]),
    Sin([i8; 2]),
}

impl BaseFactor {
    fn eval(self, x: &crate::symbolic::BaseWord, q: u8) -> f64 {
        match self {
            BaseFactor::One => 1.0,
            BaseFactor::SymbolAt(i) => (x.at(i as i64) == q) as u8 as f64,
            BaseFactor::FixedCylinder(m) => (x.match_depth(q, m as usize + 1) > m as usize) as u8 as f64,
        }
    }

    fn exact<T: Scalar>(self, g: &GibbsState<T>, q: u8) -> f64 {
        match self {
            BaseFactor::One => 1.0,
            BaseFactor::SymbolAt(_) => to_f64(g.symbol_marginal(q)),
            BaseFactor::FixedCylinder(m) => to_f64(cylinder_measure(g, &Cylinder::fixed_point(q, m as usize))),
        }
    }
}

impl FiberFactor {
    fn eval(self, y: [f64; 2]) -> f64 {
        match self {
            FiberFactor::One => 1.0,
            FiberFactor::Cos(k) => (TAU * (k[0] as f64 * y[0] + k[1] as f64 * y[1])).cos(),
            FiberFactor::Sin(k) => (TAU * (k[0] as f64 * y[0] + k[1] as f64 * y[1])).sin(),
        }
    }

    /// Haar integral.
    fn exact(self) -> f64 {
        match self {
            FiberFactor::One => 1.0,
            _ => 0.0,
        }
    }
}

/// `Σ_j 2^{-j} |∫f_j dμ - ∫f_j dν|` over a fixed 25-function dictionary of
/// products `b(x) c(y)`, base-major, `j = 1..=25`.
#[derive(Clone, Debug, Serialize)]
pub struct WeakStarMetric {
    pub version: u32,
    pub fixed_symbol: u8,
    pub dictionary: Vec<(BaseFactor, FiberFactor)>,
    pub weights: Vec<f64>,
}

/// Integrals of the dictionary, with zero errors for exact evaluations.
#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloIntegrals {
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeakStarDistance {
    pub distance: f64,
    /// `sqrt(Σ w_j² (se_a² + se_b²))`.
    pub sigma: f64,
}

impl WeakStarMetric {
    pub fn new(fixed_symbol: u8) -> Self {
        let base = [
            BaseFactor::One,
            BaseFactor::SymbolAt(-1),
            BaseFactor::SymbolAt(0),
            BaseFactor::SymbolAt(1),
            BaseFactor::FixedCylinder(1),
        ];
        let fiber = [
            FiberFactor::One,
            FiberFactor::Cos([1, 0]),
            FiberFactor::Sin([1, 0]),
            FiberFactor::Cos([0, 1]),
            FiberFactor::Sin([0, 1]),
        ];
        let dictionary: Vec<_> = base
            .iter()
            .flat_map(|&b| fiber.iter().map(move |&c| (b, c)))
            .collect();
        let weights = (1..=dictionary.len()).map(|j| 0.5f64.powi(j as i32)).collect();
        Self {
            version: DICTIONARY_VERSION,
            fixed_symbol,
            dictionary,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.dictionary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dictionary.is_empty()
    }

    /// `f_j(p)` for every `j`.
    pub fn evaluate<T: Scalar>(&self, p: &Point<T>) -> Vec<f64> {
        let y = [to_f64(p.fiber[0]), to_f64(p.fiber[1])];
        self.dictionary
            .iter()
            .map(|(b, c)| b.eval(&p.base, self.fixed_symbol) * c.eval(y))
            .collect()
    }

    /// Exact integrals under `ν ⊗ Haar`.
    pub fn exact_gibbs_haar<T: Scalar>(&self, g: &GibbsState<T>, q: u8) -> Vec<f64> {
        self.dictionary.iter().map(|(b, c)| b.exact(g, q) * c.exact()).collect()
    }

    pub fn exact_integrals<T: Scalar>(&self, g: &GibbsState<T>) -> MonteCarloIntegrals {
        MonteCarloIntegrals {
            means: self.exact_gibbs_haar(g, self.fixed_symbol),
            std_errors: vec![0.0; self.len()],
            samples: 0,
        }
    }

    /// Sample means with iid standard errors.
    pub fn monte_carlo<T: Scalar>(&self, samples: &[Point<T>]) -> MonteCarloIntegrals {
        let k = self.len();
        let mut sum = vec![0.0; k];
        let mut sq = vec![0.0; k];
        for p in samples {
            for (j, v) in self.evaluate(p).into_iter().enumerate() {
                sum[j] += v;
                sq[j] += v * v;
            }
        }
        mean_and_error(sum, sq, samples.len())
    }

    /// Mean and standard error of `f_j(a_i) - f_j(b_i)`.
    pub fn paired_differences<T: Scalar>(&self, a: &[Point<T>], b: &[Point<T>]) -> Vec<(f64, f64)> {
        assert_eq!(a.len(), b.len(), "paired samples differ in length");
        let k = self.len();
        let mut sum = vec![0.0; k];
        let mut sq = vec![0.0; k];
        for (p, q) in a.iter().zip(b) {
            let (fp, fq) = (self.evaluate(p), self.evaluate(q));
            for j in 0..k {
                let d = fp[j] - fq[j];
                sum[j] += d;
                sq[j] += d * d;
            }
        }
        let m = mean_and_error(sum, sq, a.len());
        m.means.into_iter().zip(m.std_errors).collect()
    }

    pub fn weak_star_distance(&self, a: &MonteCarloIntegrals, b: &MonteCarloIntegrals) -> WeakStarDistance {
        let mut distance = 0.0;
        let mut var = 0.0;
        for j in 0..self.len() {
            let w = self.weights[j];
            distance += w * (a.means[j] - b.means[j]).abs();
            var += w * w * (a.std_errors[j].powi(2) + b.std_errors[j].powi(2));
        }
        WeakStarDistance {
            distance,
            sigma: var.sqrt(),
        }
    }
}

fn mean_and_error(sum: Vec<f64>, sq: Vec<f64>, n: usize) -> MonteCarloIntegrals {
    let nf = n.max(1) as f64;
    let means: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_errors = means
        .iter()
        .zip(&sq)
        .map(|(m, s)| {
            if n < 2 {
                0.0
            } else {
                ((s / nf - m * m).max(0.0) * nf / (nf - 1.0) / nf).sqrt()
            }
        })
        .collect();
    MonteCarloIntegrals {
        means,
        std_errors,
        samples: n,
    }
}

/// Lift sampling shared by the curves: series length and sample budget.
#[derive(Clone, Debug, Serialize)]
pub struct LiftOptions {
    pub terms: usize,
    pub grid: usize,
    pub budget: usize,
    pub seed: u64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            terms: 40,
            grid: 64,
            budget: 20_000,
            seed: 0,
        }
    }
}

/// One CSV row: `parameter,t,d_base_exact,d_lift_mc,mc_sigma`.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityRow {
    pub parameter: String,
    pub t: f64,
    pub d_base_exact: f64,
    pub d_lift_mc: Option<f64>,
    pub mc_sigma: Option<f64>,
    /// `∫ log ζ` at the perturbed parameters.
    pub mostly_contracting: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityCurve {
    pub parameter: String,
    pub reference: f64,
    pub reference_mostly_contracting: f64,
    pub rows: Vec<StabilityRow>,
}

impl StabilityCurve {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from("parameter,t,d_base_exact,d_lift_mc,mc_sigma\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:e},{},{}\n",
                r.parameter,
                r.t,
                r.d_base_exact,
                opt(r.d_lift_mc),
                opt(r.mc_sigma)
            ));
        }
        out
    }

    pub fn base_distances(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.d_base_exact).collect()
    }

    pub fn lift_distances(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.d_lift_mc).collect()
    }

    /// `|𝓛(t) - 𝓛(reference)|` along the ladder.
    pub fn mostly_contracting_drift(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| (r.mostly_contracting - self.reference_mostly_contracting).abs())
            .collect()
    }
}

/// Strictly decreasing along the slice.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn lift<T: Scalar>(
    system: &SkewSystem<T>,
    phi: &ProductPotential<T>,
    opts: &LiftOptions,
) -> Result<LiftedState<T>, StabilityError> {
    let h = solve_semiconjugacy(system, opts.terms, opts.grid)?;
    Ok(lift_equilibrium(system, &h, phi, opts.budget, opts.seed)?)
}

/// Distances between `ν_{φ+tη}` and `ν_φ` (exact, base ⊗ Haar) and between
/// their lifts (Monte-Carlo, common random numbers) for each `t`.
pub fn potential_stability_curve<T: Scalar>(
    system: &SkewSystem<T>,
    phi: &ProductPotential<T>,
    direction: &ProductPotential<T>,
    t_ladder: &[T],
    lift_opts: Option<&LiftOptions>,
) -> Result<StabilityCurve, StabilityError> {
    if t_ladder.is_empty() {
        return Err(StabilityError::EmptyLadder);
    }
    let metric = WeakStarMetric::new(system.base().fixed_symbol());
    let reference = check_class_p(system, phi)?;
    if !reference.in_class {
        return Err(StabilityError::LeavesClass {
            t: 0.0,
            value: reference.value,
        });
    }
    let g0 = gibbs_state(system.base(), &phi.base_part)?;
    let exact0 = metric.exact_integrals(&g0);
    let lift0 = match lift_opts {
        Some(o) => Some(metric.monte_carlo(&lift(system, phi, o)?.samples)),
        None => None,
    };
    let mut rows = Vec::with_capacity(t_ladder.len());
    for &t in t_ladder {
        let perturbed = phi.add_scaled(system.base(), direction, t);
        let class = check_class_p(system, &perturbed)?;
        if !class.in_class {
            return Err(StabilityError::LeavesClass {
                t: to_f64(t),
                value: class.value,
            });
        }
        let g = gibbs_state(system.base(), &perturbed.base_part)?;
        let d_base = metric.weak_star_distance(&metric.exact_integrals(&g), &exact0).distance;
        let (d_lift, sigma) = match (lift_opts, &lift0) {
            (Some(o), Some(l0)) => {
                let d = metric.weak_star_distance(&metric.monte_carlo(&lift(system, &perturbed, o)?.samples), l0);
                (Some(d.distance), Some(d.sigma))
            }
            _ => (None, None),
        };
        rows.push(StabilityRow {
            parameter: "t".into(),
            t: to_f64(t),
            d_base_exact: d_base,
            d_lift_mc: d_lift,
            mc_sigma: sigma,
            mostly_contracting: class.value,
        });
    }
    Ok(StabilityCurve {
        parameter: "t".into(),
        reference: 0.0,
        reference_mostly_contracting: reference.value,
        rows,
    })
}

/// Fiber-family parameter varied by [`dynamics_stability_curve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsParameter {
    BetaMax,
    MOut,
    BumpRadius,
}

impl DynamicsParameter {
    pub fn name(self) -> &'static str {
        match self {
            DynamicsParameter::BetaMax => "beta_max",
            DynamicsParameter::MOut => "m_out",
            DynamicsParameter::BumpRadius => "bump_radius",
        }
    }

    pub fn current<T: Scalar>(self, ff: &FiberFamily<T>) -> f64 {
        match self {
            DynamicsParameter::BetaMax => to_f64(ff.beta_max()),
            DynamicsParameter::MOut => ff.region_depths().0 as f64,
            DynamicsParameter::BumpRadius => to_f64(ff.bump_radius()),
        }
    }

    pub fn apply<T: Scalar>(self, ff: &FiberFamily<T>, value: f64) -> Result<FiberFamily<T>, TorusError> {
        match self {
            DynamicsParameter::BetaMax => ff.with_beta_max(lit(value)),
            DynamicsParameter::MOut => {
                let mut spec = ff.to_spec();
                spec.m_out = value.round().max(0.0) as usize;
                FiberFamily::new(&spec, ff.fixed_symbol())
            }
            DynamicsParameter::BumpRadius => {
                let mut spec = ff.to_spec();
                spec.bump_radius = value;
                FiberFamily::new(&spec, ff.fixed_symbol())
            }
        }
    }
}

/// Lift distances between the reference system and systems with one
/// fiber-family parameter moved along `ladder`. The base Gibbs factor is
/// untouched, so `d_base_exact` is identically zero.
pub fn dynamics_stability_curve<T: Scalar>(
    system: &SkewSystem<T>,
    parameter: DynamicsParameter,
    ladder: &[f64],
    phi: &ProductPotential<T>,
    lift_opts: &LiftOptions,
) -> Result<StabilityCurve, StabilityError> {
    if ladder.is_empty() {
        return Err(StabilityError::EmptyLadder);
    }
    let metric = WeakStarMetric::new(system.base().fixed_symbol());
    let reference = check_class_p(system, phi)?;
    let lift0 = metric.monte_carlo(&lift(system, phi, lift_opts)?.samples);
    let g = gibbs_state(system.base(), &phi.base_part)?;
    let mut rows = Vec::with_capacity(ladder.len());
    for &value in ladder {
        let invalid = || StabilityError::InvalidPerturbation {
            parameter: parameter.name().into(),
            value,
        };
        let fibers = parameter.apply(system.fibers(), value).map_err(|_| invalid())?;
        let perturbed = system.with_fibers(fibers)?;
        if !perturbed.validate(&ValidationOptions::default())?.passed() {
            return Err(invalid());
        }
        let class = check_class_p(&perturbed, phi)?;
        if !class.in_class {
            return Err(StabilityError::LeavesClass { t: value, value: class.value });
        }
        let d = metric.weak_star_distance(&metric.monte_carlo(&lift(&perturbed, phi, lift_opts)?.samples), &lift0);
        rows.push(StabilityRow {
            parameter: parameter.name().into(),
            t: value,
            d_base_exact: 0.0,
            d_lift_mc: Some(d.distance),
            mc_sigma: Some(d.sigma),
            mostly_contracting: to_f64(mostly_contracting_integral(perturbed.fibers(), &g)),
        });
    }
    Ok(StabilityCurve {
        parameter: parameter.name().into(),
        reference: parameter.current(system.fibers()),
        reference_mostly_contracting: reference.value,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OpennessTrial {
    pub margin: f64,
    pub radius: f64,
    pub perturbations: usize,
    pub all_in_class: bool,
    pub min_perturbed_value: f64,
}

/// A conservative radius for `ℙ` around `φ`: `𝓛` moves by at most
/// `max|log ζ| · (total variation of the depth-class law)`, and the latter is
/// bounded by the Gibbs sensitivity of cylinders spanning the potential window
/// and the deformation ring.
pub fn openness_radius<T: Scalar>(system: &SkewSystem<T>, phi: &ProductPotential<T>, margin: f64) -> f64 {
    let ff = system.fibers();
    let (_, m_in) = ff.region_depths();
    let max_log = (0..=m_in)
        .map(|j| to_f64(ff.zeta_at_depth(j).ln()).abs())
        .fold(0.0, f64::max);
    let span = (2 * (m_in.max(1) - 1) + 1 + 2 * phi.window_radius()) as f64;
    margin / (4.0 * max_log * span)
}

/// For `trials` random potentials of window radius `radius` in `ℙ`, checks
/// that `samples` random perturbations inside the openness radius stay in `ℙ`.
pub fn openness_check<T: Scalar>(
    system: &SkewSystem<T>,
    trials: usize,
    radius: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<OpennessTrial>, StabilityError> {
    let rng = RefCell::new(ChaCha8Rng::seed_from_u64(seed));
    let draw = || lit::<T>(rng.borrow_mut().gen_range(-1.0..1.0));
    let base = system.base();
    let mut out = Vec::with_capacity(trials);
    while out.len() < trials {
        let phi = ProductPotential::new(
            BasePotential::from_fn(base, radius, |_| draw()),
            T::zero(),
        );
        let class = check_class_p(system, &phi)?;
        if !class.in_class {
            continue;
        }
        let r = openness_radius(system, &phi, class.value);
        let mut all = true;
        let mut min_value = f64::INFINITY;
        for _ in 0..samples {
            let eta = BasePotential::from_fn(base, radius, |_| draw());
            let sup = to_f64(eta.sup_abs()).max(f64::MIN_POSITIVE);
            let t = rng.borrow_mut().gen_range(-1.0..1.0) * 0.999 * r / sup;
            let perturbed = ProductPotential::new(phi.base_part.add_scaled(base, &eta, lit(t)), T::zero());
            let c = check_class_p(system, &perturbed)?;
            all &= c.in_class;
            min_value = min_value.min(c.value);
        }
        out.push(OpennessTrial {
            margin: class.value,
            radius: r,
            perturbations: samples,
            all_in_class: all,
            min_perturbed_value: min_value,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_shape() {
        let m = WeakStarMetric::new(0);
        assert_eq!(m.len(), 25);
        assert_eq!(m.weights[0], 0.5);
        assert!(m.weights.iter().sum::<f64>() < 1.0);
        assert_eq!(m.dictionary[5], (BaseFactor::SymbolAt(-1), FiberFactor::One));
    }

    #[test]
    fn exact_distance_to_itself_is_zero() {
        let g = GibbsState::<f64>::bernoulli(&[0.5, 0.5]).unwrap();
        let m = WeakStarMetric::new(0);
        let e = m.exact_integrals(&g);
        assert_eq!(m.weak_star_distance(&e, &e).distance, 0.0);
    }

    #[test]
    fn fixed_cylinder_factor_matches_match_depth() {
        let x = crate::symbolic::BaseWord::new(vec![1, 0, 0, 0, 1], 2);
        assert_eq!(BaseFactor::FixedCylinder(1).eval(&x, 0), 1.0);
        assert_eq!(BaseFactor::FixedCylinder(1).eval(&x.shifted(1), 0), 0.0);
        assert_eq!(BaseFactor::SymbolAt(1).eval(&x.shifted(1), 0), 0.0);
    }
}
