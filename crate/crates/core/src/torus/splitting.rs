use super::{FiberFamily, TorusError};
use crate::scalar::{dot2, norm2, Scalar};
use crate::symbolic::BaseWord;

/// Estimated unstable direction at the end of an orbit segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SplittingEstimate<T> {
    pub at: (BaseWord, [T; 2]),
    pub e_u_estimate: [T; 2],
    /// Per-step geometric mean growth of the pushed vector.
    pub expansion_u: T,
    /// `‖D f(e_u_estimate)‖` at the final point.
    pub one_step_expansion: T,
    /// Stable factor at the final point.
    pub contraction_s: T,
    /// Angle between the last two iterates (radians).
    pub cone_angle: T,
    /// Angle between the estimate and `e_s` (radians).
    pub transversality: T,
    /// Upper bound `(λ_s + β_max)/λ_u` on the per-step convergence ratio.
    pub convergence_ratio: T,
}

fn angle<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    // unoriented angle between lines, accurate near zero
    let cross = (a[0] * b[1] - a[1] * b[0]).abs();
    cross.atan2(dot2(a, b).abs())
}

fn apply<T: Scalar>(m: [[T; 2]; 2], v: [T; 2]) -> [T; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Pushes a generic vector through the derivative cocycle along
/// `segment = [(x_{-N}, y_{-N}), …, (x_0, y_0)]`.
pub fn estimate_unstable_field<T: Scalar>(
    family: &FiberFamily<T>,
    segment: &[(BaseWord, [T; 2])],
    tolerance: T,
) -> Result<SplittingEstimate<T>, TorusError> {
    if segment.len() < 2 {
        return Err(TorusError::ShortSegment);
    }
    let l = family.automorphism();
    let (e_u, e_s) = (l.e_u(), l.e_s());
    let unit = |w: [T; 2]| {
        let n = norm2(w);
        [w[0] / n, w[1] / n]
    };
    // two vectors on either side of e_u; their angle measures convergence
    let mut v = unit([e_u[0] + e_s[0], e_u[1] + e_s[1]]);
    let mut other = unit([e_u[0] - e_s[0], e_u[1] - e_s[1]]);
    let mut log_growth = T::zero();
    for (x, y) in &segment[..segment.len() - 1] {
        let d = family.derivative(x, *y);
        let w = apply(d, v);
        log_growth = log_growth + norm2(w).ln();
        v = unit(w);
        other = unit(apply(d, other));
    }
    let steps = T::from_usize(segment.len() - 1).unwrap();
    let (x0, y0) = segment.last().unwrap().clone();
    let cone_angle = angle(v, other);
    if cone_angle > tolerance {
        return Err(TorusError::SplittingNotConverged {
            achieved: cone_angle.to_f64().unwrap(),
            requested: tolerance.to_f64().unwrap(),
        });
    }
    let one_step_expansion = norm2(apply(family.derivative(&x0, y0), v));
    let contraction_s = family.stable_derivative_factor(&x0, y0);
    Ok(SplittingEstimate {
        e_u_estimate: v,
        expansion_u: (log_growth / steps).exp(),
        one_step_expansion,
        contraction_s,
        cone_angle,
        transversality: angle(v, e_s),
        convergence_ratio: (l.lambda_s() + family.beta_max() * family.slope_sup()) / l.lambda_u(),
        at: (x0, y0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::lit;

    #[test]
    fn constant_cocycle_recovers_e_u() {
        let f = FiberFamily::<f64>::standard(0).undeformed();
        let x = BaseWord::constant(0, 4);
        let mut y = [0.1, 0.2];
        let mut seg = vec![(x.clone(), y)];
        for _ in 0..30 {
            y = f.fiber_map(&x, y);
            seg.push((x.clone(), y));
        }
        let est = estimate_unstable_field(&f, &seg, lit(1e-10)).unwrap();
        let e_u = f.automorphism().e_u();
        assert!((est.e_u_estimate[0] - e_u[0]).abs() < 1e-10);
        assert!((est.e_u_estimate[1] - e_u[1]).abs() < 1e-10);
        assert!((est.expansion_u - f.automorphism().lambda_u()).abs() < 0.1);
    }

    #[test]
    fn too_short_segment_reports_the_achieved_angle() {
        let f = FiberFamily::<f64>::standard(0);
        let x = BaseWord::constant(0, 4);
        let seg = vec![(x.clone(), [0.01, 0.0]), (x.clone(), f.fiber_map(&x, [0.01, 0.0]))];
        match estimate_unstable_field(&f, &seg, lit(1e-12)) {
            Err(TorusError::SplittingNotConverged { achieved, .. }) => assert!(achieved > 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
