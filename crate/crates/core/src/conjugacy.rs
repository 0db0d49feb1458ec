//! The semi-conjugacy `H(x, y) = (x, H_x(y))` with `(σ × L) ∘ H = H ∘ F`.
//!
//! Writing `H_x(y) = y + u_x(y)` and `g_x = f_x - L`, the intertwining identity
//! becomes `u_x = A⁻¹(g_x + u_{σx} ∘ f_x)`. In eigen-coordinates
//! `u = a_u e_u + a_s e_s`, `g = G_u e_u + G_s e_s` this splits into
//!
//! * `a_u(p) = Σ_{n≥0} λ_u^{-(n+1)} G_u(Fⁿ p)` (forward orbit),
//! * `a_s(p) = -Σ_{k≥1} λ_s^{k-1} G_s(F^{-k} p)` (backward orbit),
//!
//! both truncated after `N` terms and evaluated on exact orbit points.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{lit, to_f64, Scalar};
use crate::skew::{Point, SkewError, SkewSystem};
use crate::torus::{self, wrap2};

#[derive(Debug, Error)]
pub enum ConjugacyError {
    #[error(transparent)]
    Skew(#[from] SkewError),
    #[error("{terms} series terms exceed the base word window W = {window}")]
    TermsExceedWindow { terms: usize, window: usize },
    #[error("series truncation must be at least 1")]
    NoTerms,
    #[error("no preimage on the centre leaf: leaf function spans [{low:e}, {high:e}]")]
    NoPreimage { low: f64, high: f64 },
}

/// Lazy evaluator of `H`.
#[derive(Clone, Debug)]
pub struct SemiConjugacy<T> {
    system: SkewSystem<T>,
    terms: usize,
    grid: usize,
    sup_g: T,
    ratio: T,
}

/// Solution set of `H_x(w) = y` along one centre leaf.
#[derive(Clone, Debug, Serialize)]
pub struct LeafPreimage<T> {
    /// Points of the solution arc at the scan resolution, endpoints included.
    pub points: Vec<[T; 2]>,
    /// Leaf coordinates of the arc endpoints relative to the scan origin.
    pub interval: (T, T),
    pub diameter: T,
}

/// Builds the series evaluator for `H` with `N = terms`.
pub fn solve_semiconjugacy<T: Scalar>(
    system: &SkewSystem<T>,
    terms: usize,
    grid: usize,
) -> Result<SemiConjugacy<T>, ConjugacyError> {
    if terms == 0 {
        return Err(ConjugacyError::NoTerms);
    }
    if terms > system.window() {
        return Err(ConjugacyError::TermsExceedWindow {
            terms,
            window: system.window(),
        });
    }
    let ff = system.fibers();
    let l = ff.automorphism();
    Ok(SemiConjugacy {
        system: system.clone(),
        terms,
        grid,
        sup_g: ff.beta_max() * ff.profile_sup(),
        ratio: l.lambda_s().max(T::one() / l.lambda_u()),
    })
}

impl<T: Scalar> SemiConjugacy<T> {
    pub fn system(&self) -> &SkewSystem<T> {
        &self.system
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn grid_resolution(&self) -> usize {
        self.grid
    }

    /// `C = sup|g| / (1 - r)` with `r = max(λ_u⁻¹, λ_s)`: bound on `|u|`.
    pub fn displacement_bound(&self) -> T {
        self.sup_g / (T::one() - self.ratio)
    }

    /// Series tail bound `C rᴺ`.
    pub fn error_bound(&self) -> T {
        self.displacement_bound() * self.ratio.powi(self.terms as i32)
    }

    fn g_coordinates(&self, p: &Point<T>) -> (T, T) {
        let g = self.system.fibers().displacement(&p.base, p.fiber);
        if g == [T::zero(); 2] {
            return (T::zero(), T::zero());
        }
        self.system.fibers().automorphism().eigen_coordinates(g)
    }

    /// `a_u(p)` from the forward orbit.
    pub fn unstable_coordinate(&self, p: &Point<T>) -> T {
        let lambda_u = self.system.fibers().automorphism().lambda_u();
        let mut gs = Vec::with_capacity(self.terms);
        let mut q = p.clone();
        for _ in 0..self.terms {
            gs.push(self.g_coordinates(&q).0);
            q = self.system.apply(&q);
        }
        gs.iter().rev().fold(T::zero(), |s, &g| (s + g) / lambda_u)
    }

    /// `a_s(p)` from the backward orbit.
    pub fn stable_coordinate(&self, p: &Point<T>) -> Result<T, ConjugacyError> {
        let lambda_s = self.system.fibers().automorphism().lambda_s();
        let mut gs = Vec::with_capacity(self.terms);
        let mut q = p.clone();
        for _ in 0..self.terms {
            q = self.system.apply_inverse(&q)?;
            gs.push(self.g_coordinates(&q).1);
        }
        Ok(-gs.iter().rev().fold(T::zero(), |s, &g| lambda_s * s + g))
    }

    /// `u_x(y)` on the lift.
    pub fn displacement(&self, p: &Point<T>) -> Result<[T; 2], ConjugacyError> {
        let l = self.system.fibers().automorphism();
        let (a_u, a_s) = (self.unstable_coordinate(p), self.stable_coordinate(p)?);
        let (e_u, e_s) = (l.e_u(), l.e_s());
        Ok([a_u * e_u[0] + a_s * e_s[0], a_u * e_u[1] + a_s * e_s[1]])
    }

    /// `H(p) = (x, y + u_x(y))`.
    pub fn apply(&self, p: &Point<T>) -> Result<Point<T>, ConjugacyError> {
        let u = self.displacement(p)?;
        Ok(Point::new(
            p.base.clone(),
            [p.fiber[0] + u[0], p.fiber[1] + u[1]],
        ))
    }

    /// `d(H(F p), (σ × L)(H p))`.
    pub fn residual(&self, p: &Point<T>) -> Result<T, ConjugacyError> {
        let left = self.apply(&self.system.apply(p))?;
        let right = self.system.fibers().automorphism().apply(self.apply(p)?.fiber);
        Ok(torus::distance(left.fiber, right))
    }

    /// `t ↦ t + a_s(x, y₀ + t e_s)`: the leaf coordinate of `H_x` along the
    /// centre leaf through `y₀`. Nondecreasing because every fiber map moves
    /// centre leaves monotonically.
    fn leaf_function(&self, x: &Point<T>, origin: [T; 2], t: T) -> Result<T, ConjugacyError> {
        let e_s = self.system.fibers().automorphism().e_s();
        let w = Point {
            base: x.base.clone(),
            fiber: wrap2([origin[0] + t * e_s[0], origin[1] + t * e_s[1]]),
        };
        Ok(t + self.stable_coordinate(&w)?)
    }

    /// Origin of the leaf scan: `y - a_u(x, y) e_u`.
    fn leaf_origin(&self, z: &Point<T>) -> [T; 2] {
        let a_u = self.unstable_coordinate(z);
        let e_u = self.system.fibers().automorphism().e_u();
        [z.fiber[0] - a_u * e_u[0], z.fiber[1] - a_u * e_u[1]]
    }

    fn leaf_bracket(&self) -> T {
        self.displacement_bound() + lit(1e-9)
    }

    /// Smallest `t` in `[lo, hi]` with `f(t) ≥ level` (or largest with
    /// `f(t) ≤ level` when `upper`), by bisection down to `width`.
    fn bisect(
        &self,
        f: &impl Fn(T) -> Result<T, ConjugacyError>,
        mut lo: T,
        mut hi: T,
        level: T,
        upper: bool,
    ) -> Result<T, ConjugacyError> {
        let width = T::epsilon() * lit(8.0);
        for _ in 0..200 {
            if hi - lo <= width {
                break;
            }
            let mid = (lo + hi) / lit(2.0);
            let v = f(mid)?;
            let go_right = if upper { v <= level } else { v < level };
            if go_right {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(if upper { lo } else { hi })
    }

    /// All `w` on the centre leaf with `H_x(w) = y_z`, as an arc.
    pub fn preimage_scan(&self, z: &Point<T>, leaf_resolution: T) -> Result<LeafPreimage<T>, ConjugacyError> {
        let origin = self.leaf_origin(z);
        let e_s = self.system.fibers().automorphism().e_s();
        let at = |t: T| wrap2([origin[0] + t * e_s[0], origin[1] + t * e_s[1]]);
        if self.sup_g == T::zero() {
            return Ok(LeafPreimage {
                points: vec![at(T::zero())],
                interval: (T::zero(), T::zero()),
                diameter: T::zero(),
            });
        }
        let tol = lit::<T>(2.0) * self.error_bound() + lit::<T>(64.0) * T::epsilon();
        let f = |t: T| self.leaf_function(z, origin, t);
        let b = self.leaf_bracket();
        let (f_lo, f_hi) = (f(-b)?, f(b)?);
        if f_lo > tol || f_hi < -tol {
            return Err(ConjugacyError::NoPreimage {
                low: to_f64(f_lo),
                high: to_f64(f_hi),
            });
        }
        let t_lo = self.bisect(&f, -b, b, -tol, false)?;
        let t_hi = self.bisect(&f, -b, b, tol, true)?.max(t_lo);
        let mut points = vec![at(t_lo)];
        if t_hi > t_lo {
            let steps = ((t_hi - t_lo) / leaf_resolution).ceil().to_usize().unwrap_or(1).clamp(1, 100_000);
            for i in 1..=steps {
                let t = t_lo + (t_hi - t_lo) * T::from_usize(i).unwrap() / T::from_usize(steps).unwrap();
                points.push(at(t));
            }
        }
        Ok(LeafPreimage {
            points,
            interval: (t_lo, t_hi),
            diameter: t_hi - t_lo,
        })
    }

    /// One solution of `H_x(w) = y` by bisection on the leaf coordinate.
    pub fn invert_on_leaf(&self, z: &Point<T>) -> Result<Point<T>, ConjugacyError> {
        if self.sup_g == T::zero() {
            return Ok(z.clone());
        }
        let origin = self.leaf_origin(z);
        let f = |t: T| self.leaf_function(z, origin, t);
        let b = self.leaf_bracket();
        let (f_lo, f_hi) = (f(-b)?, f(b)?);
        if f_lo > T::zero() || f_hi < T::zero() {
            return Err(ConjugacyError::NoPreimage {
                low: to_f64(f_lo),
                high: to_f64(f_hi),
            });
        }
        let t = self.bisect(&f, -b, b, T::zero(), false)?;
        let e_s = self.system.fibers().automorphism().e_s();
        Ok(Point {
            base: z.base.clone(),
            fiber: wrap2([origin[0] + t * e_s[0], origin[1] + t * e_s[1]]),
        })
    }
}

/// `max_p d(H(F p), (σ × L)(H p))`.
pub fn intertwining_residual<T: Scalar>(h: &SemiConjugacy<T>, samples: &[Point<T>]) -> Result<T, ConjugacyError> {
    samples
        .iter()
        .try_fold(T::zero(), |m, p| Ok(m.max(h.residual(p)?)))
}

/// Residual summary for reports.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualStats {
    #[serde(rename = "N")]
    pub terms: usize,
    pub max_residual: f64,
    pub error_bound: f64,
    /// `(q, value)` pairs.
    pub quantiles: Vec<(f64, f64)>,
}

pub fn residual_stats<T: Scalar>(h: &SemiConjugacy<T>, samples: &[Point<T>]) -> Result<ResidualStats, ConjugacyError> {
    let mut r: Vec<f64> = samples
        .iter()
        .map(|p| h.residual(p).map(to_f64))
        .collect::<Result<_, _>>()?;
    r.sort_by(f64::total_cmp);
    let q = |f: f64| {
        if r.is_empty() {
            0.0
        } else {
            r[((r.len() - 1) as f64 * f).round() as usize]
        }
    };
    Ok(ResidualStats {
        terms: h.terms(),
        max_residual: r.last().copied().unwrap_or(0.0),
        error_bound: to_f64(h.error_bound()),
        quantiles: [0.5, 0.9, 0.99, 1.0].iter().map(|&f| (f, q(f))).collect(),
    })
}
