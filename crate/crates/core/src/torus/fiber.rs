use serde::{Deserialize, Serialize};

use super::{build_cat_map, delta, distance, wrap2, ToralAutomorphism, TorusError};
use crate::scalar::{dot2, lit, to_f64, Scalar};
use crate::symbolic::BaseWord;

/// Lorentzian damping in the bump `χ(u) = exp(1 - 1/(1-u²)) / (1 + a u²)`.
/// With `a = 10` the radial slope `(u χ)'` stays above `-0.3`, which keeps the
/// shear invertible up to `β_max / λ_s ≈ 3.3`.
pub const BUMP_DAMPING: f64 = 10.0;

const VERIFY_GRID: usize = 201;

/// JSON form of a fiber family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub matrix: [[i64; 2]; 2],
    pub lambda_c: f64,
    pub bump_radius: f64,
    pub m_out: usize,
    pub m_in: usize,
    #[serde(default)]
    pub theta: [f64; 2],
}

impl Default for FiberSpec {
    fn default() -> Self {
        Self {
            matrix: [[2, 1], [1, 1]],
            lambda_c: 1.2,
            bump_radius: 0.15,
            m_out: 1,
            m_in: 2,
            theta: [0.0, 0.0],
        }
    }
}

/// The parameterized family `f_x(y) = A y + β(x) ψ(y) e_s (mod Z²)`.
///
/// `ψ(y) = κ χ(|y-θ|/ρ) ((y-θ)·e_s)` with `κ` chosen so `sup ∂_{e_s} ψ = 1`,
/// and `β(x) = β_max · clamp((m(x) - m_out)/(m_in - m_out), 0, 1)` where `m(x)`
/// counts the rings around index 0 on which `x` matches the fixed symbol.
#[derive(Clone, Debug)]
pub struct FiberFamily<T> {
    automorphism: ToralAutomorphism<T>,
    theta: [T; 2],
    bump_radius: T,
    beta_max: T,
    m_out: usize,
    m_in: usize,
    fixed_symbol: u8,
    scale: T,
    slope_sup: T,
    slope_inf: T,
    profile_sup: T,
    lambda_c: f64,
}

/// `(χ(u), χ'(u)/u)`.
#[inline]
fn bump<T: Scalar>(u: T) -> (T, T) {
    if u >= T::one() {
        return (T::zero(), T::zero());
    }
    let one = T::one();
    let two = lit::<T>(2.0);
    let a = lit::<T>(BUMP_DAMPING);
    let q = one - u * u;
    let e = (one - one / q).exp();
    if e == T::zero() {
        return (T::zero(), T::zero());
    }
    let d = one + a * u * u;
    let chi = e / d;
    (chi, chi * (-two / (q * q) - two * a / d))
}

fn golden_max<T: Scalar>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> (T, T) {
    let g = lit::<T>(0.618_033_988_749_894_8);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = (lo + hi) / lit(2.0);
    (x, f(x).max(f1).max(f2))
}

impl<T: Scalar> FiberFamily<T> {
    pub fn new(spec: &FiberSpec, fixed_symbol: u8) -> Result<Self, TorusError> {
        let automorphism: ToralAutomorphism<T> = build_cat_map(spec.matrix)?;
        let lambda_s = automorphism.stable_eigenvalue();
        if lambda_s <= T::zero() {
            return Err(TorusError::NegativeStableEigenvalue(to_f64(lambda_s)));
        }
        let lambda_c = lit::<T>(spec.lambda_c);
        // tolerate λ_c written as a rounded λ_s for the undeformed control
        let beta_max = (lambda_c - lambda_s).max(T::zero());
        if !(spec.lambda_c.is_finite()
            && lambda_c >= lambda_s - lit(1e-12)
            && lambda_c < automorphism.lambda_u())
        {
            return Err(TorusError::CenterRate {
                lambda_c: spec.lambda_c,
                lambda_s: to_f64(lambda_s),
                lambda_u: to_f64(automorphism.lambda_u()),
            });
        }
        if !(spec.bump_radius > 0.0 && spec.bump_radius < 0.25) {
            return Err(TorusError::BumpRadius(spec.bump_radius));
        }
        if spec.m_out >= spec.m_in {
            return Err(TorusError::Depths {
                m_out: spec.m_out,
                m_in: spec.m_in,
            });
        }
        let theta = wrap2([lit::<T>(spec.theta[0]), lit::<T>(spec.theta[1])]);
        if distance(automorphism.apply(theta), theta) > lit(1e-9) {
            return Err(TorusError::ThetaNotFixed(spec.theta));
        }
        let mut family = Self {
            automorphism,
            theta,
            bump_radius: lit(spec.bump_radius),
            beta_max,
            m_out: spec.m_out,
            m_in: spec.m_in,
            fixed_symbol,
            scale: T::one(),
            slope_sup: T::one(),
            slope_inf: T::zero(),
            profile_sup: T::zero(),
            lambda_c: spec.lambda_c,
        };
        family.scale = T::one() / family.search_slope_sup();
        family.slope_sup = family.search_slope_sup();
        family.profile_sup = family.search_profile_sup();
        let (inf, margin) = family.invertibility_check(VERIFY_GRID);
        family.slope_inf = inf;
        if margin <= T::zero() {
            return Err(TorusError::NotInvertible(to_f64(margin)));
        }
        Ok(family)
    }

    /// The default deformation (`λ_c = 1.2`, `ρ_f = 0.15`, `m_out = 1`, `m_in = 2`).
    pub fn standard(fixed_symbol: u8) -> Self {
        Self::new(&FiberSpec::default(), fixed_symbol).expect("default parameters are valid")
    }

    /// Same parameters with the deformation switched off (`β_max = 0`).
    pub fn undeformed(&self) -> Self {
        self.with_beta_max(T::zero()).expect("undeformed family is valid")
    }

    /// Same parameters with `λ_c = λ_s + beta_max`.
    pub fn with_beta_max(&self, beta_max: T) -> Result<Self, TorusError> {
        let mut spec = self.to_spec();
        spec.lambda_c = to_f64(self.automorphism.stable_eigenvalue() + beta_max);
        let mut f = Self::new(&spec, self.fixed_symbol)?;
        // keep β exact rather than round-tripping through f64
        f.beta_max = beta_max.max(T::zero());
        Ok(f)
    }

    pub fn to_spec(&self) -> FiberSpec {
        FiberSpec {
            matrix: self.automorphism.matrix(),
            lambda_c: self.lambda_c,
            bump_radius: to_f64(self.bump_radius),
            m_out: self.m_out,
            m_in: self.m_in,
            theta: [to_f64(self.theta[0]), to_f64(self.theta[1])],
        }
    }

    pub fn automorphism(&self) -> &ToralAutomorphism<T> {
        &self.automorphism
    }

    pub fn theta(&self) -> [T; 2] {
        self.theta
    }

    pub fn bump_radius(&self) -> T {
        self.bump_radius
    }

    pub fn beta_max(&self) -> T {
        self.beta_max
    }

    /// `λ_c = λ_s + β_max`: the centre rate of `f_q` at `θ`.
    pub fn lambda_c(&self) -> T {
        self.automorphism.lambda_s() + self.beta_max * self.slope_sup
    }

    pub fn region_depths(&self) -> (usize, usize) {
        (self.m_out, self.m_in)
    }

    pub fn fixed_symbol(&self) -> u8 {
        self.fixed_symbol
    }

    /// `sup_y ∂_{e_s} ψ(y)` after normalization (1 up to the search accuracy).
    pub fn slope_sup(&self) -> T {
        self.slope_sup
    }

    /// `inf_y ∂_{e_s} ψ(y)`.
    pub fn slope_inf(&self) -> T {
        self.slope_inf
    }

    /// `sup_y |ψ(y)|`.
    pub fn profile_sup(&self) -> T {
        self.profile_sup
    }

    /// Normalization constant `κ`.
    pub fn profile_scale(&self) -> T {
        self.scale
    }

    // ---- amplitude schedule ----

    /// `m(x)`, capped at `m_in`.
    pub fn match_depth(&self, x: &BaseWord) -> usize {
        x.match_depth(self.fixed_symbol, self.m_in)
    }

    pub fn amplitude_at_depth(&self, m: usize) -> T {
        let num = m as f64 - self.m_out as f64;
        let den = (self.m_in - self.m_out) as f64;
        self.beta_max * lit::<T>((num / den).clamp(0.0, 1.0))
    }

    /// `β(x)`.
    #[inline]
    pub fn amplitude(&self, x: &BaseWord) -> T {
        self.amplitude_at_depth(self.match_depth(x))
    }

    // ---- profile ----

    /// `ψ(y)`.
    #[inline]
    pub fn profile(&self, y: [T; 2]) -> T {
        let d = delta(y, self.theta);
        let r = d[0].hypot(d[1]);
        if r >= self.bump_radius {
            return T::zero();
        }
        let (chi, _) = bump(r / self.bump_radius);
        self.scale * chi * dot2(d, self.automorphism.e_s())
    }

    /// `∇ψ(y)`.
    #[inline]
    pub fn profile_gradient(&self, y: [T; 2]) -> [T; 2] {
        let d = delta(y, self.theta);
        let r = d[0].hypot(d[1]);
        if r >= self.bump_radius {
            return [T::zero(); 2];
        }
        let rho = self.bump_radius;
        let (chi, chi_over_u) = bump(r / rho);
        let radial = chi_over_u / (rho * rho);
        let e_s = self.automorphism.e_s();
        let s = dot2(d, e_s);
        [
            self.scale * (radial * s * d[0] + chi * e_s[0]),
            self.scale * (radial * s * d[1] + chi * e_s[1]),
        ]
    }

    /// `∂_{e_s} ψ(y)`.
    #[inline]
    pub fn stable_slope(&self, y: [T; 2]) -> T {
        dot2(self.profile_gradient(y), self.automorphism.e_s())
    }

    fn search_slope_sup(&self) -> T {
        let rho = self.bump_radius;
        let e_s = self.automorphism.e_s();
        let e_u = self.automorphism.e_u();
        let at = |r: T, angle: T| {
            let (c, s) = (angle.cos(), angle.sin());
            let v = [
                self.theta[0] + r * (c * e_s[0] + s * e_u[0]),
                self.theta[1] + r * (c * e_s[1] + s * e_u[1]),
            ];
            self.stable_slope(v)
        };
        let (nr, na) = (200usize, 64usize);
        let mut best = (T::zero(), T::zero(), at(T::zero(), T::zero()));
        for i in 0..nr {
            let r = rho * T::from_usize(i).unwrap() / T::from_usize(nr).unwrap();
            for j in 0..na {
                let a = T::PI() * T::from_usize(j).unwrap() / T::from_usize(na).unwrap();
                let v = at(r, a);
                if v > best.2 {
                    best = (r, a, v);
                }
            }
        }
        let step = rho / T::from_usize(nr).unwrap();
        let lo = (best.0 - step).max(T::zero());
        let (_, refined) = golden_max(|r| at(r, best.1), lo, best.0 + step);
        refined.max(best.2)
    }

    fn search_profile_sup(&self) -> T {
        let rho = self.bump_radius;
        let radial = |r: T| self.scale * bump(r / rho).0 * r;
        let n = 400;
        let mut best = (T::zero(), T::zero());
        for i in 0..n {
            let r = rho * T::from_usize(i).unwrap() / T::from_usize(n).unwrap();
            let v = radial(r);
            if v > best.1 {
                best = (r, v);
            }
        }
        let step = rho / T::from_usize(n).unwrap();
        golden_max(radial, (best.0 - step).max(T::zero()), best.0 + step).1.max(best.1)
    }

    /// Minimum of `∂_{e_s}ψ` on a grid over the bump and the resulting margin of
    /// `1 + (β_max/λ_s) ∂_{e_s}ψ`, reduced by a Lipschitz allowance for the cells.
    pub fn invertibility_check(&self, grid: usize) -> (T, T) {
        let rho = self.bump_radius;
        let n = grid.max(3);
        let h = lit::<T>(2.0) * rho / T::from_usize(n - 1).unwrap();
        let mut values = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let y = [
                    self.theta[0] - rho + h * T::from_usize(i).unwrap(),
                    self.theta[1] - rho + h * T::from_usize(j).unwrap(),
                ];
                values[i * n + j] = self.stable_slope(y);
            }
        }
        let min = values.iter().fold(T::infinity(), |m, &v| m.min(v));
        let mut lip = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n {
                    lip = lip.max((values[(i + 1) * n + j] - values[i * n + j]).abs() / h);
                }
                if j + 1 < n {
                    lip = lip.max((values[i * n + j + 1] - values[i * n + j]).abs() / h);
                }
            }
        }
        // half a cell diagonal, doubled slope estimate
        let allowance = lit::<T>(2.0) * lip * h * lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
        let ratio = self.beta_max / self.automorphism.lambda_s();
        (min, T::one() + ratio * (min - allowance))
    }

    // ---- dynamics ----

    /// `A y + β ψ(y) e_s (mod Z²)`.
    #[inline]
    pub fn map_with_amplitude(&self, beta: T, y: [T; 2]) -> [T; 2] {
        let ay = self.automorphism.apply_lift(y);
        if beta == T::zero() {
            return wrap2(ay);
        }
        let push = beta * self.profile(y);
        let e_s = self.automorphism.e_s();
        wrap2([ay[0] + push * e_s[0], ay[1] + push * e_s[1]])
    }

    /// `f_x(y)`.
    #[inline]
    pub fn fiber_map(&self, x: &BaseWord, y: [T; 2]) -> [T; 2] {
        self.map_with_amplitude(self.amplitude(x), y)
    }

    /// `g_x(y) = f_x(y) - A y` on the lift.
    #[inline]
    pub fn displacement(&self, x: &BaseWord, y: [T; 2]) -> [T; 2] {
        let push = self.amplitude(x) * self.profile(y);
        let e_s = self.automorphism.e_s();
        [push * e_s[0], push * e_s[1]]
    }

    /// Straight-line homotopy `L(y) + (1-t) β(x) ψ(y) e_s` from `f_x` to `L`.
    pub fn homotopy(&self, x: &BaseWord, y: [T; 2], t: T) -> [T; 2] {
        self.map_with_amplitude((T::one() - t) * self.amplitude(x), y)
    }

    /// Inverse of `y ↦ A y + β ψ(y) e_s`.
    ///
    /// With `v = A⁻¹ z` the preimage is `v + t e_s` where `t` solves
    /// `λ_s t + β ψ(v + t e_s) = 0`; the left side is strictly increasing, so a
    /// safeguarded Newton iteration inside the a priori bracket always converges.
    pub fn inverse_with_amplitude(&self, beta: T, z: [T; 2]) -> Result<[T; 2], TorusError> {
        let v = self.automorphism.apply_inverse_lift(z);
        if beta == T::zero() {
            return Ok(wrap2(v));
        }
        let lambda_s = self.automorphism.lambda_s();
        let e_s = self.automorphism.e_s();
        let point = |t: T| [v[0] + t * e_s[0], v[1] + t * e_s[1]];
        // far from the bump the linear inverse is exact
        if distance(v, self.theta) >= self.bump_radius + beta * self.profile_sup / lambda_s {
            return Ok(wrap2(v));
        }
        let bound = beta * self.profile_sup / lambda_s * lit(1.000_001) + T::epsilon();
        let (mut lo, mut hi) = (-bound, bound);
        let mut t = T::zero();
        let eps = T::epsilon();
        for _ in 0..200 {
            let y = point(t);
            let h = lambda_s * t + beta * self.profile(y);
            if h == T::zero() {
                return Ok(wrap2(y));
            }
            if h > T::zero() {
                hi = t;
            } else {
                lo = t;
            }
            let slope = lambda_s + beta * self.stable_slope(y);
            let mut next = t - h / slope;
            if !(slope > T::zero()) || !(next > lo && next < hi) {
                next = (lo + hi) / lit(2.0);
            }
            let step = (next - t).abs();
            t = next;
            if step <= lit::<T>(4.0) * eps * (T::one() + t.abs()) || hi - lo <= eps {
                return Ok(wrap2(point(t)));
            }
        }
        let y = point(t);
        Err(TorusError::InverseDiverged(to_f64((lambda_s * t + beta * self.profile(y)).abs())))
    }

    /// `f_x⁻¹(z)`.
    pub fn fiber_inverse(&self, x: &BaseWord, z: [T; 2]) -> Result<[T; 2], TorusError> {
        self.inverse_with_amplitude(self.amplitude(x), z)
    }

    /// `D_y f_x = A + β(x) e_s ⊗ ∇ψ(y)`.
    pub fn derivative_with_amplitude(&self, beta: T, y: [T; 2]) -> [[T; 2]; 2] {
        let m = self.automorphism.matrix();
        let f = |v: i64| T::from_i64(v).unwrap();
        let g = self.profile_gradient(y);
        let e_s = self.automorphism.e_s();
        [
            [f(m[0][0]) + beta * e_s[0] * g[0], f(m[0][1]) + beta * e_s[0] * g[1]],
            [f(m[1][0]) + beta * e_s[1] * g[0], f(m[1][1]) + beta * e_s[1] * g[1]],
        ]
    }

    pub fn derivative(&self, x: &BaseWord, y: [T; 2]) -> [[T; 2]; 2] {
        self.derivative_with_amplitude(self.amplitude(x), y)
    }

    /// `λ_s + β ∂_{e_s}ψ(y)`: the factor by which `D_y f_x` scales `e_s`.
    #[inline]
    pub fn stable_factor_with_amplitude(&self, beta: T, y: [T; 2]) -> T {
        let lambda_s = self.automorphism.lambda_s();
        if beta == T::zero() {
            return lambda_s;
        }
        lambda_s + beta * self.stable_slope(y)
    }

    pub fn stable_derivative_factor(&self, x: &BaseWord, y: [T; 2]) -> T {
        self.stable_factor_with_amplitude(self.amplitude(x), y)
    }

    /// `ζ(x) = inf_y ‖D_y f_x⁻¹|_{E^s}‖ = (λ_s + β(x) sup ∂_{e_s}ψ)⁻¹`.
    pub fn zeta(&self, x: &BaseWord) -> T {
        self.zeta_at_depth(self.match_depth(x))
    }

    pub fn zeta_at_depth(&self, m: usize) -> T {
        T::one() / (self.automorphism.lambda_s() + self.amplitude_at_depth(m) * self.slope_sup)
    }

    /// `ζ(x)` by direct minimization of `1 / stable factor` over a `grid × grid`
    /// lattice anchored at `θ`.
    pub fn zeta_grid(&self, x: &BaseWord, grid: usize) -> T {
        let beta = self.amplitude(x);
        let n = T::from_usize(grid).unwrap();
        let mut best = T::infinity();
        for i in 0..grid {
            for j in 0..grid {
                let y = wrap2([
                    self.theta[0] + T::from_usize(i).unwrap() / n,
                    self.theta[1] + T::from_usize(j).unwrap() / n,
                ]);
                best = best.min(T::one() / self.stable_factor_with_amplitude(beta, y));
            }
        }
        best
    }
}
