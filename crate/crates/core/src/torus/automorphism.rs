use super::{wrap2, TorusError};
use crate::scalar::{lit, Scalar};

/// A hyperbolic toral automorphism `L` induced by an integer matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ToralAutomorphism<T> {
    matrix: [[i64; 2]; 2],
    inverse: [[i64; 2]; 2],
    unstable: (T, [T; 2]),
    stable: (T, [T; 2]),
}

/// Validates `det = ±1`, `|trace| > 2` and fills in the eigen data.
pub fn build_cat_map<T: Scalar>(matrix: [[i64; 2]; 2]) -> Result<ToralAutomorphism<T>, TorusError> {
    let [[a, b], [c, d]] = matrix;
    let det = a * d - b * c;
    let trace = a + d;
    if det.abs() != 1 {
        return Err(TorusError::NotUnimodular(det));
    }
    if trace.abs() <= 2 {
        return Err(TorusError::NotHyperbolic { trace, det });
    }
    let inverse = [[d * det, -b * det], [-c * det, a * det]];
    let tr = T::from_i64(trace).unwrap();
    let disc = (tr * tr - lit::<T>(4.0) * T::from_i64(det).unwrap()).sqrt();
    let two = lit::<T>(2.0);
    let (big, small) = if trace > 0 {
        ((tr + disc) / two, (tr - disc) / two)
    } else {
        ((tr - disc) / two, (tr + disc) / two)
    };
    // recompute the small root from the product to avoid cancellation
    let small = if small.abs() < lit(0.5) {
        T::from_i64(det).unwrap() / big
    } else {
        small
    };
    Ok(ToralAutomorphism {
        matrix,
        inverse,
        unstable: (big, eigenvector(matrix, big)),
        stable: (small, eigenvector(matrix, small)),
    })
}

fn eigenvector<T: Scalar>(m: [[i64; 2]; 2], lambda: T) -> [T; 2] {
    let f = |v: i64| T::from_i64(v).unwrap();
    let [[a, b], [c, d]] = m;
    let v = if b.abs() >= c.abs() {
        [f(b), lambda - f(a)]
    } else {
        [lambda - f(d), f(c)]
    };
    let n = v[0].hypot(v[1]);
    let s = if v[0] < T::zero() || (v[0] == T::zero() && v[1] < T::zero()) {
        -T::one()
    } else {
        T::one()
    };
    [s * v[0] / n, s * v[1] / n]
}

impl<T: Scalar> ToralAutomorphism<T> {
    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.matrix
    }

    pub fn inverse_matrix(&self) -> [[i64; 2]; 2] {
        self.inverse
    }

    /// Signed unstable eigenvalue.
    pub fn unstable_eigenvalue(&self) -> T {
        self.unstable.0
    }

    /// Signed stable eigenvalue.
    pub fn stable_eigenvalue(&self) -> T {
        self.stable.0
    }

    pub fn lambda_u(&self) -> T {
        self.unstable.0.abs()
    }

    pub fn lambda_s(&self) -> T {
        self.stable.0.abs()
    }

    pub fn e_u(&self) -> [T; 2] {
        self.unstable.1
    }

    pub fn e_s(&self) -> [T; 2] {
        self.stable.1
    }

    #[inline]
    fn mul(m: [[i64; 2]; 2], v: [T; 2]) -> [T; 2] {
        let f = |x: i64| T::from_i64(x).unwrap();
        [f(m[0][0]) * v[0] + f(m[0][1]) * v[1], f(m[1][0]) * v[0] + f(m[1][1]) * v[1]]
    }

    /// `A v` on the lift.
    #[inline]
    pub fn apply_lift(&self, v: [T; 2]) -> [T; 2] {
        Self::mul(self.matrix, v)
    }

    #[inline]
    pub fn apply_inverse_lift(&self, v: [T; 2]) -> [T; 2] {
        Self::mul(self.inverse, v)
    }

    /// `L(y) = A y mod Z²`.
    #[inline]
    pub fn apply(&self, y: [T; 2]) -> [T; 2] {
        wrap2(self.apply_lift(y))
    }

    #[inline]
    pub fn apply_inverse(&self, y: [T; 2]) -> [T; 2] {
        wrap2(self.apply_inverse_lift(y))
    }

    /// Coordinates `(a_u, a_s)` with `v = a_u e_u + a_s e_s`.
    pub fn eigen_coordinates(&self, v: [T; 2]) -> (T, T) {
        let (u, s) = (self.unstable.1, self.stable.1);
        let det = u[0] * s[1] - u[1] * s[0];
        ((v[0] * s[1] - v[1] * s[0]) / det, (u[0] * v[1] - u[1] * v[0]) / det)
    }
}
