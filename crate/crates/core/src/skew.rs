//! The skew-product `F(x, y) = (σx, f_x(y))` over a subshift of finite type.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{dot2, lit, to_f64, Scalar};
use crate::symbolic::{
    format_word, gibbs_state, parse_word, BaseDiagnostics, BasePotential, BaseWord, ChainSampler, SymbolicBase,
    SymbolicError,
};
use crate::torus::{self, estimate_unstable_field, wrap2, FiberFamily, TorusError};

/// Default half-width `W` of the stored base window.
pub const DEFAULT_WINDOW: usize = 64;

#[derive(Debug, Error)]
pub enum SkewError {
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error("fiber family deforms around symbol {fibers} but the base fixes symbol {base}")]
    FixedSymbolMismatch { fibers: u8, base: u8 },
    #[error("base word window too short: need [{from}, {to}] around the origin")]
    WindowTooShort { from: i64, to: i64 },
    #[error("invalid point: {0}")]
    InvalidPoint(String),
}

/// A phase-space point `(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<T> {
    pub base: BaseWord,
    pub fiber: [T; 2],
}

impl<T: Scalar> Point<T> {
    pub fn new(base: BaseWord, fiber: [T; 2]) -> Self {
        Self {
            base,
            fiber: wrap2(fiber),
        }
    }

    pub fn to_spec(&self) -> PointSpec {
        PointSpec {
            word: format_word(self.base.symbols()),
            offset: self.base.origin(),
            y: [to_f64(self.fiber[0]), to_f64(self.fiber[1])],
        }
    }

    pub fn from_spec(spec: &PointSpec) -> Result<Self, SkewError> {
        let symbols = parse_word(&spec.word)?;
        if symbols.is_empty() {
            return Err(SkewError::InvalidPoint("empty word".into()));
        }
        let origin = spec.offset.rem_euclid(symbols.len() as i64) as usize;
        Ok(Self::new(
            BaseWord::new(symbols, origin),
            [lit(spec.y[0]), lit(spec.y[1])],
        ))
    }
}

/// JSON form `{"word": "…", "offset": 0, "y": [u, v]}`; `offset` indexes `x_0` in `word`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub word: String,
    pub offset: i64,
    pub y: [f64; 2],
}

/// A real function on phase space.
pub trait Observable<T>: Sync {
    fn eval(&self, p: &Point<T>) -> T;
}

impl<T, F> Observable<T> for F
where
    F: Fn(&Point<T>) -> T + Sync,
{
    fn eval(&self, p: &Point<T>) -> T {
        self(p)
    }
}

/// `φ(x, y) = φ₁(x) + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPotential<T> {
    pub base_part: BasePotential<T>,
    pub fiber_constant: T,
}

impl<T: Scalar> ProductPotential<T> {
    pub fn new(base_part: BasePotential<T>, fiber_constant: T) -> Self {
        Self {
            base_part,
            fiber_constant,
        }
    }

    pub fn zero(base: &SymbolicBase) -> Self {
        Self::new(BasePotential::zero(base), T::zero())
    }

    pub fn constant(base: &SymbolicBase, c: T) -> Self {
        Self::new(BasePotential::zero(base), c)
    }

    pub fn window_radius(&self) -> usize {
        self.base_part.window_radius()
    }

    /// `φ + t η`, both parts.
    pub fn add_scaled(&self, base: &SymbolicBase, direction: &Self, t: T) -> Self {
        Self::new(
            self.base_part.add_scaled(base, &direction.base_part, t),
            self.fiber_constant + t * direction.fiber_constant,
        )
    }

    pub fn sup_abs(&self) -> T {
        self.base_part.sup_abs() + self.fiber_constant.abs()
    }
}

impl<T: Scalar> Observable<T> for ProductPotential<T> {
    fn eval(&self, p: &Point<T>) -> T {
        self.base_part.eval(&p.base) + self.fiber_constant
    }
}

/// `F = (σ, (f_x))` with the product metric `max(d_base, d_torus)`.
#[derive(Clone, Debug)]
pub struct SkewSystem<T> {
    base: SymbolicBase,
    fibers: FiberFamily<T>,
    window: usize,
}

impl<T: Scalar> SkewSystem<T> {
    pub fn new(base: SymbolicBase, fibers: FiberFamily<T>) -> Result<Self, SkewError> {
        base.validate()?;
        if fibers.fixed_symbol() != base.fixed_symbol() {
            return Err(SkewError::FixedSymbolMismatch {
                fibers: fibers.fixed_symbol(),
                base: base.fixed_symbol(),
            });
        }
        Ok(Self {
            base,
            fibers,
            window: DEFAULT_WINDOW,
        })
    }

    /// Full 2-shift with the default fiber family.
    pub fn standard() -> Self {
        let base = SymbolicBase::full_shift(2);
        let fibers = FiberFamily::standard(base.fixed_symbol());
        Self::new(base, fibers).expect("default system is valid")
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(1);
        self
    }

    /// Same base, different fiber family.
    pub fn with_fibers(&self, fibers: FiberFamily<T>) -> Result<Self, SkewError> {
        Ok(Self::new(self.base.clone(), fibers)?.with_window(self.window))
    }

    pub fn base(&self) -> &SymbolicBase {
        &self.base
    }

    pub fn fibers(&self) -> &FiberFamily<T> {
        &self.fibers
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// `(q, θ)`.
    pub fn fixed_point(&self) -> Point<T> {
        Point::new(
            BaseWord::constant(self.base.fixed_symbol(), self.window),
            self.fibers.theta(),
        )
    }

    #[inline]
    pub fn apply(&self, p: &Point<T>) -> Point<T> {
        Point {
            base: p.base.shifted(1),
            fiber: self.fibers.fiber_map(&p.base, p.fiber),
        }
    }

    pub fn apply_inverse(&self, p: &Point<T>) -> Result<Point<T>, SkewError> {
        let x = p.base.shifted(-1);
        let y = self.fibers.fiber_inverse(&x, p.fiber)?;
        Ok(Point { base: x, fiber: y })
    }

    /// `F^k p` for `k = from..=to`.
    pub fn orbit(&self, p: &Point<T>, from: i64, to: i64) -> Result<Vec<Point<T>>, SkewError> {
        assert!(from <= to, "orbit range {from}..={to} is empty");
        let mut start = p.clone();
        if from < 0 {
            for _ in 0..-from {
                start = self.apply_inverse(&start)?;
            }
        } else {
            for _ in 0..from {
                start = self.apply(&start);
            }
        }
        let mut out = Vec::with_capacity((to - from + 1) as usize);
        out.push(start);
        for _ in from..to {
            let next = self.apply(out.last().unwrap());
            out.push(next);
        }
        Ok(out)
    }

    /// Backward orbit `[p_{-n}, …, p_{-1}, p_0]`.
    pub fn backward_segment(&self, p: &Point<T>, n: usize) -> Result<Vec<Point<T>>, SkewError> {
        let mut seg = Vec::with_capacity(n + 1);
        seg.push(p.clone());
        for _ in 0..n {
            let prev = self.apply_inverse(seg.last().unwrap())?;
            seg.push(prev);
        }
        seg.reverse();
        Ok(seg)
    }

    pub fn distance(&self, p: &Point<T>, q: &Point<T>) -> T {
        lit::<T>(p.base.distance(&q.base)).max(torus::distance(p.fiber, q.fiber))
    }

    /// Number of steps `k` for which `σ^{±k} x` still sees the deformation
    /// window inside the stored (non-periodic) part of `x`.
    pub fn usable_steps(&self, p: &Point<T>) -> usize {
        let (_, m_in) = self.fibers.region_depths();
        (p.base.stored_radius() - m_in as i64).max(0) as usize
    }

    /// Errors unless `[from, to]` is stored without periodic wrap.
    pub fn require_window(&self, p: &Point<T>, from: i64, to: i64) -> Result<(), SkewError> {
        if p.base.covers(from, to) {
            Ok(())
        } else {
            Err(SkewError::WindowTooShort { from, to })
        }
    }

    /// A point with base word drawn from `sampler` over `[-W, W]` and Haar fiber.
    pub fn sample_point<R: Rng>(&self, sampler: &ChainSampler, rng: &mut R) -> Point<T> {
        let x = sampler.sample(self.window, rng);
        let y = [lit(rng.gen::<f64>()), lit(rng.gen::<f64>())];
        Point::new(x, y)
    }

    /// Checks the standing assumptions on the default verification grids.
    pub fn validate(&self, options: &ValidationOptions) -> Result<SystemReport, SkewError> {
        let base = self.base.validate()?;
        let ff = &self.fibers;
        let l = ff.automorphism();
        let (m_out, m_in) = ff.region_depths();
        let q = self.base.fixed_symbol();

        // condition (1): β is a function of the window [-m_in, m_in]
        let radius = m_in;
        let words = self.base.admissible_words(2 * radius + 1);
        let mut locally_constant = true;
        let mut amplitudes: Vec<T> = Vec::new();
        for w in &words {
            let inner = BaseWord::new(w.clone(), radius);
            let beta = ff.amplitude(&inner);
            amplitudes.push(beta);
            // any admissible extension: pad with the fixed symbol when allowed
            for pad in 0..self.base.alphabet() as u8 {
                let mut ext = vec![pad];
                ext.extend_from_slice(w);
                ext.push(pad);
                if self.base.is_admissible(&ext) {
                    let outer = BaseWord::new(ext, radius + 1);
                    if ff.amplitude(&outer) != beta {
                        locally_constant = false;
                    }
                }
            }
        }
        let spread = amplitudes.iter().fold(T::zero(), |m, &b| m.max(b))
            - amplitudes.iter().fold(T::infinity(), |m, &b| m.min(b));
        let continuity_modulus = spread * ff.profile_sup();
        let displacement_bound = ff.beta_max() * ff.profile_sup();

        // condition (2), homotopy: sampled sup |g_x|
        let q_word = BaseWord::constant(q, self.window);
        let n = options.grid.max(2);
        let mut displacement_sup = T::zero();
        let theta = ff.theta();
        let grid_point = |i: usize, j: usize| {
            wrap2([
                theta[0] + T::from_usize(i).unwrap() / T::from_usize(n).unwrap(),
                theta[1] + T::from_usize(j).unwrap() / T::from_usize(n).unwrap(),
            ])
        };
        for i in 0..n {
            for j in 0..n {
                let g = ff.displacement(&q_word, grid_point(i, j));
                displacement_sup = displacement_sup.max(g[0].hypot(g[1]));
            }
        }

        // condition (3) on the grid over sampled base words
        let g0 = gibbs_state::<T>(&self.base, &BasePotential::zero(&self.base))?;
        let sampler = ChainSampler::new(&g0);
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut xs = vec![q_word.clone()];
        for _ in 0..options.x_samples {
            xs.push(sampler.sample(self.window, &mut rng));
        }
        let mut min_expansion = T::infinity();
        let mut min_mean_expansion = T::infinity();
        let mut max_stable = T::zero();
        let mut min_transversality = T::infinity();
        let mut foliation_defect = T::zero();
        let mut round_trip = T::zero();
        let e_s = l.e_s();
        let normal = [-e_s[1], e_s[0]];
        for x in &xs {
            for i in 0..n {
                for j in 0..n {
                    let y = grid_point(i, j);
                    let p = Point::new(x.clone(), y);
                    let seg = self.backward_segment(&p, options.backward_steps)?;
                    let pairs: Vec<_> = seg.iter().map(|s| (s.base.clone(), s.fiber)).collect();
                    let est = estimate_unstable_field(ff, &pairs, lit(1e-6))?;
                    min_expansion = min_expansion.min(est.one_step_expansion);
                    min_mean_expansion = min_mean_expansion.min(est.expansion_u);
                    min_transversality = min_transversality.min(est.transversality);
                    max_stable = max_stable.max(est.contraction_s);
                    let d = ff.derivative(x, y);
                    let image = [d[0][0] * e_s[0] + d[0][1] * e_s[1], d[1][0] * e_s[0] + d[1][1] * e_s[1]];
                    foliation_defect = foliation_defect.max(dot2(image, normal).abs());
                    let back = self.apply_inverse(&self.apply(&p))?;
                    round_trip = round_trip.max(torus::distance(back.fiber, y));
                }
            }
        }
        let (slope_inf, invertibility_margin) = ff.invertibility_check(options.grid.max(64) * 3 + 1);
        let h2_defect = (ff.slope_sup() - T::one())
            .abs()
            .max((ff.stable_slope(theta) - T::one()).abs());

        Ok(SystemReport {
            base,
            region_depths: (m_out, m_in),
            beta_max: to_f64(ff.beta_max()),
            lambda_u: to_f64(l.lambda_u()),
            lambda_s: to_f64(l.lambda_s()),
            lambda_c: to_f64(ff.lambda_c()),
            locally_constant,
            continuity_modulus: to_f64(continuity_modulus),
            displacement_sup: to_f64(displacement_sup),
            displacement_bound: to_f64(displacement_bound),
            min_expansion_u: to_f64(min_expansion),
            min_mean_expansion_u: to_f64(min_mean_expansion),
            max_stable_factor: to_f64(max_stable),
            min_transversality: to_f64(min_transversality),
            foliation_defect: to_f64(foliation_defect),
            round_trip_error: to_f64(round_trip),
            slope_inf: to_f64(slope_inf),
            invertibility_margin: to_f64(invertibility_margin),
            h2_defect: to_f64(h2_defect),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Fiber grid size per side.
    pub grid: usize,
    /// Random base words in addition to the fixed point.
    pub x_samples: usize,
    /// Backward steps used to estimate the unstable direction.
    pub backward_steps: usize,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            grid: 64,
            x_samples: 4,
            backward_steps: 30,
            seed: 0,
        }
    }
}

/// Outcome of [`SkewSystem::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct SystemReport {
    pub base: BaseDiagnostics,
    pub region_depths: (usize, usize),
    pub beta_max: f64,
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub lambda_c: f64,
    /// `β(x)` depends only on `x_{[-m_in, m_in]}`.
    pub locally_constant: bool,
    /// `sup_y |f_x(y) - f_x'(y)|` across depth classes.
    pub continuity_modulus: f64,
    pub displacement_sup: f64,
    /// `β_max sup|ψ|`.
    pub displacement_bound: f64,
    pub min_expansion_u: f64,
    pub min_mean_expansion_u: f64,
    pub max_stable_factor: f64,
    pub min_transversality: f64,
    pub foliation_defect: f64,
    pub round_trip_error: f64,
    pub slope_inf: f64,
    pub invertibility_margin: f64,
    pub h2_defect: f64,
}

impl SystemReport {
    pub fn continuity_ok(&self) -> bool {
        self.locally_constant && self.continuity_modulus <= self.displacement_bound * (1.0 + 1e-12)
    }

    pub fn homotopy_ok(&self) -> bool {
        self.displacement_sup <= self.displacement_bound * (1.0 + 1e-12)
    }

    /// `inf ‖Df|E^u‖ > max(1, sup ‖Df|E^cs‖)`.
    pub fn domination_ok(&self) -> bool {
        self.min_expansion_u > self.max_stable_factor.max(1.0) && self.min_mean_expansion_u > 1.0
    }

    pub fn invertibility_ok(&self) -> bool {
        self.invertibility_margin > 0.0 && self.round_trip_error < 1e-9
    }

    pub fn h2_ok(&self) -> bool {
        self.h2_defect <= 1e-6
    }

    pub fn passed(&self) -> bool {
        self.continuity_ok()
            && self.homotopy_ok()
            && self.domination_ok()
            && self.invertibility_ok()
            && self.h2_ok()
            && self.foliation_defect < 1e-12
    }
}
