//! Torus arithmetic, the linear Anosov map and the derived-from-Anosov fiber
//! family `f_x(y) = A y + β(x) ψ(y) e_s (mod Z²)`.

mod automorphism;
mod fiber;
mod splitting;

use thiserror::Error;

pub use automorphism::{build_cat_map, ToralAutomorphism};
pub use fiber::{FiberFamily, FiberSpec, BUMP_DAMPING};
pub use splitting::{estimate_unstable_field, SplittingEstimate};

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TorusError {
    #[error("|det| must be 1, got {0}")]
    NotUnimodular(i64),
    #[error("matrix is not hyperbolic: trace {trace}, det {det}")]
    NotHyperbolic { trace: i64, det: i64 },
    #[error("stable eigenvalue {0} is negative; the rank-one shear needs 0 < λ_s < 1")]
    NegativeStableEigenvalue(f64),
    #[error("lambda_c = {lambda_c} must lie in [λ_s, λ_u) = [{lambda_s}, {lambda_u})")]
    CenterRate { lambda_c: f64, lambda_s: f64, lambda_u: f64 },
    #[error("bump radius {0} outside (0, 1/4)")]
    BumpRadius(f64),
    #[error("region depths must satisfy m_out < m_in, got {m_out} and {m_in}")]
    Depths { m_out: usize, m_in: usize },
    #[error("theta {0:?} is not a fixed point of the linear map")]
    ThetaNotFixed([f64; 2]),
    #[error("fiber maps are not invertible: min of 1 + β/λ_s ∂ψ is {0} on the verification grid")]
    NotInvertible(f64),
    #[error("fiber inverse did not converge, residual {0:e}")]
    InverseDiverged(f64),
    #[error("unstable direction not converged: cone angle {achieved:e} > {requested:e}")]
    SplittingNotConverged { achieved: f64, requested: f64 },
    #[error("orbit segment needs at least two points")]
    ShortSegment,
}

/// Reduces into `[0, 1)`.
#[inline]
pub fn wrap<T: Scalar>(v: T) -> T {
    let r = v - v.floor();
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

#[inline]
pub fn wrap2<T: Scalar>(v: [T; 2]) -> [T; 2] {
    [wrap(v[0]), wrap(v[1])]
}

/// Minimal-image representative of `a - b` in `[-1/2, 1/2)²`.
#[inline]
pub fn delta<T: Scalar>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    let half = T::from_f64(0.5).unwrap();
    let f = |d: T| d - (d + half).floor();
    [f(a[0] - b[0]), f(a[1] - b[1])]
}

/// Flat torus distance.
#[inline]
pub fn distance<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    let d = delta(a, b);
    d[0].hypot(d[1])
}
