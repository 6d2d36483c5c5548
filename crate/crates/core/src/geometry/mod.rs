//! Constant-curvature geometries and the maps between them.
//!
//! Hyperbolic space of curvature `k < 0` appears in two isometric models:
//! the upper hyperboloid sheet in Minkowski space ([`lorentz`]) and the
//! Poincaré ball ([`poincare`]), related by stereographic projection. The
//! spherical case (`k > 0`) is a Euclidean sphere of radius `1/sqrt(k)`; the
//! fixed-radius embeddings used for few-shot learning live on such a sphere
//! but are compared with the plain (chordal) `ℓ2` metric.
//!
//! Points carry their curvature. Mixing curvatures in a binary operation is a
//! hard error, never a silent cast. Inverse trig/hyperbolic arguments are
//! clamped to their closed domains when within rounding tolerance of them and
//! rejected beyond.

pub mod lorentz;
pub mod poincare;

pub use lorentz::{
    hyperboloid_distance, hyperboloid_exp, inclusion, lorentz_inner, HyperboloidPoint,
    HyperboloidTangent,
};
pub use poincare::{
    conformal_factor, fixed_radius_hyperbolic_distance, inverse_stereographic, mobius_add,
    poincare_distance, poincare_exp0, stereographic, PoincarePoint,
};

use crate::error::{Error, Result};
use crate::numeric::acos_arg;
use crate::vecmath;

/// Tolerance for membership checks on the sphere (`|‖x‖ - r| ≤ tol·max(1, r)`).
pub(crate) const SPHERE_NORM_TOL: f64 = 1e-9;

/// The metric space an embedding lives in.
///
/// * `EuclideanSquared` — `R^d` with the squared `ℓ2` distance.
/// * `PoincareBall` — ball of radius `1/sqrt(-k)` with geodesic distance;
///   `epsilon` is the boundary margin used for the effective-radius cap.
/// * `FixedRadiusSphere` — sphere of radius `1/sqrt(k)` (`k > 0` stored as the
///   spherical curvature) compared with the chordal `ℓ2` metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureSpace {
    EuclideanSquared,
    PoincareBall { k: f64, epsilon: f64 },
    FixedRadiusSphere { k: f64 },
}

impl CurvatureSpace {
    pub fn euclidean_squared() -> Self {
        CurvatureSpace::EuclideanSquared
    }

    /// Poincaré ball with curvature `k < 0` and boundary margin `epsilon ∈ (0, 1)`.
    pub fn poincare_ball(k: f64, epsilon: f64) -> Result<Self> {
        if !(k < 0.0) || !k.is_finite() {
            return Err(Error::InvalidCurvature { k, reason: "Poincaré ball requires k < 0" });
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(CurvatureSpace::PoincareBall { k, epsilon })
    }

    /// Sphere described by its positive curvature `k`; radius is `1/sqrt(k)`.
    pub fn fixed_radius_sphere(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidCurvature { k, reason: "sphere requires k > 0" });
        }
        Ok(CurvatureSpace::FixedRadiusSphere { k })
    }

    /// Sphere described by its radius `r > 0`; stores `k = 1/r^2`.
    pub fn sphere_with_radius(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("sphere radius must be positive, got {r}")));
        }
        Self::fixed_radius_sphere(1.0 / (r * r))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CurvatureSpace::EuclideanSquared => "euclidean",
            CurvatureSpace::PoincareBall { .. } => "poincare",
            CurvatureSpace::FixedRadiusSphere { .. } => "sphere",
        }
    }

    /// Sectional curvature; zero in the Euclidean case.
    pub fn curvature(&self) -> f64 {
        match *self {
            CurvatureSpace::EuclideanSquared => 0.0,
            CurvatureSpace::PoincareBall { k, .. } => k,
            CurvatureSpace::FixedRadiusSphere { k } => k,
        }
    }

    /// Sphere radius `1/sqrt(k)`, if this is a sphere.
    pub fn sphere_radius(&self) -> Option<f64> {
        match *self {
            CurvatureSpace::FixedRadiusSphere { k } => Some(1.0 / k.sqrt()),
            _ => None,
        }
    }

    /// Capped ball radius `(1 - epsilon)/sqrt(-k)`, if this is a Poincaré ball.
    pub fn effective_radius(&self) -> Option<f64> {
        match *self {
            CurvatureSpace::PoincareBall { k, epsilon } => Some((1.0 - epsilon) / (-k).sqrt()),
            _ => None,
        }
    }

    /// Check that `x` is a valid point of the space.
    pub fn validate_point(&self, x: &[f64]) -> Result<()> {
        match *self {
            CurvatureSpace::EuclideanSquared => {
                if x.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint("non-finite coordinate".into()))
                }
            }
            CurvatureSpace::PoincareBall { k, .. } => {
                let n2 = vecmath::norm_sq(x);
                if !n2.is_finite() {
                    return Err(Error::InvalidPoint("non-finite coordinate".into()));
                }
                if n2 < -1.0 / k {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint(format!(
                        "squared norm {n2} is not inside the ball of radius^2 {}",
                        -1.0 / k
                    )))
                }
            }
            CurvatureSpace::FixedRadiusSphere { k } => {
                let r = 1.0 / k.sqrt();
                let n = vecmath::norm(x);
                if !n.is_finite() {
                    return Err(Error::InvalidPoint("non-finite coordinate".into()));
                }
                if (n - r).abs() <= SPHERE_NORM_TOL * r.max(1.0) {
                    Ok(())
                } else {
                    Err(Error::InvalidPoint(format!("norm {n} is not on the sphere of radius {r}")))
                }
            }
        }
    }
}

/// Capped ball radius `(1 - epsilon)/sqrt(-k)` for `k < 0`, `epsilon ∈ [0, 1)`.
pub fn effective_radius(epsilon: f64, k: f64) -> Result<f64> {
    check_negative_curvature(k)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok((1.0 - epsilon) / (-k).sqrt())
}

/// Ball radius reached when features of magnitude `c` pass through the origin
/// exponential map: `tanh(sqrt(-k) c)/sqrt(-k)`.
pub fn clipped_radius(c: f64, k: f64) -> Result<f64> {
    check_negative_curvature(k)?;
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("clip magnitude must be positive, got {c}")));
    }
    let s = (-k).sqrt();
    Ok((s * c).tanh() / s)
}

/// Hyperbolic (geodesic) distance from the origin to any point at Euclidean
/// norm `r` in the ball: `(1/sqrt(-k)) ln((R + r)/(R - r))` with `R = 1/sqrt(-k)`.
pub fn hyperbolic_radius_of(r_euclidean: f64, k: f64) -> Result<f64> {
    check_negative_curvature(k)?;
    let ball_r = 1.0 / (-k).sqrt();
    if !(0.0..ball_r).contains(&r_euclidean) {
        return Err(Error::NumericDomain(format!(
            "Euclidean radius {r_euclidean} must lie in [0, {ball_r})"
        )));
    }
    Ok(ball_r * ((ball_r + r_euclidean) / (ball_r - r_euclidean)).ln())
}

/// Euclidean radius of the sphere isometric to a hyperbolic `(d-1)`-sphere of
/// the given hyperbolic radius: `(1/sqrt(-k)) sinh(r sqrt(-k))`.
///
/// Composed with [`hyperbolic_radius_of`] this simplifies to
/// `2r/(1 + k r^2) = λ(r)·r` for a Euclidean ball radius `r`.
pub fn isometric_sphere_radius(hyperbolic_radius: f64, k: f64) -> Result<f64> {
    check_negative_curvature(k)?;
    if hyperbolic_radius < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "hyperbolic radius must be nonnegative, got {hyperbolic_radius}"
        )));
    }
    let s = (-k).sqrt();
    Ok((hyperbolic_radius * s).sinh() / s)
}

/// Great-circle distance `(1/sqrt(k)) acos(k <x, y>)` on the sphere of radius
/// `1/sqrt(k)`, `k > 0`. Both points must lie on the sphere.
pub fn spherical_distance(x: &[f64], y: &[f64], k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidCurvature { k, reason: "spherical distance requires k > 0" });
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let space = CurvatureSpace::FixedRadiusSphere { k };
    space.validate_point(x)?;
    space.validate_point(y)?;
    let arg = acos_arg(k * vecmath::dot(x, y), 1e-12)?;
    Ok(arg.acos() / k.sqrt())
}

/// Plain Euclidean distance `‖x - y‖`. For equal-norm inputs of norm `r` this
/// equals `sqrt(2 r^2 (1 - cos α))`, the chordal metric on the sphere.
pub fn chordal_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    Ok(vecmath::dist_sq(x, y).sqrt())
}

pub(crate) fn check_negative_curvature(k: f64) -> Result<()> {
    if k < 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidCurvature { k, reason: "hyperbolic operations require k < 0" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn effective_radius_examples() {
        assert_relative_eq!(effective_radius(0.0, -1.0).unwrap(), 1.0);
        // reported capped radii for the three curvatures, at margin 1e-3
        assert_relative_eq!(
            effective_radius(0.001, -0.05).unwrap(),
            4.46766381904458,
            max_relative = 1e-12
        );
        assert_relative_eq!(effective_radius(0.01, -0.01).unwrap(), 9.9, max_relative = 1e-12);
        assert!(effective_radius(1.0, -1.0).is_err());
        assert!(effective_radius(0.5, 1.0).is_err());
    }

    #[test]
    fn clipped_radius_reproduces_reported_values() {
        let vals: Vec<f64> =
            [2.0, 3.0, 4.0].iter().map(|&c| clipped_radius(c, -0.05).unwrap()).collect();
        assert_relative_eq!(vals[0], 1.8765345764798784, max_relative = 1e-12);
        assert_relative_eq!(vals[1], 2.618521812699728, max_relative = 1e-12);
        assert_relative_eq!(vals[2], 3.1911978218721972, max_relative = 1e-12);
        for (v, printed) in vals.iter().zip([1.877, 2.618, 3.191]) {
            assert!((v - printed).abs() < 1e-3);
        }
    }

    #[test]
    fn clipped_radius_saturates_at_ball_radius() {
        let r = clipped_radius(1e6, -0.05).unwrap();
        assert_relative_eq!(r, 1.0 / 0.05f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn hyperbolic_radius_examples() {
        assert_eq!(hyperbolic_radius_of(0.0, -1.0).unwrap(), 0.0);
        assert_relative_eq!(
            hyperbolic_radius_of(0.5f64.tanh(), -1.0).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert!(hyperbolic_radius_of(1.0, -1.0).is_err());
        // log form equals 2 atanh(sqrt(-k) r)/sqrt(-k)
        for &(r, k) in &[(0.3, -1.0), (2.0, -0.05), (9.0, -0.01)] {
            let s = (-k as f64).sqrt();
            assert_relative_eq!(
                hyperbolic_radius_of(r, k).unwrap(),
                2.0 * (s * r).atanh() / s,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn isometric_sphere_radius_composition() {
        assert_eq!(isometric_sphere_radius(0.0, -1.0).unwrap(), 0.0);
        // composed form equals lambda(r) * r = 2r / (1 + k r^2)
        for &(r, k) in &[(0.5, -1.0), (9.9, -0.01), (3.0, -0.05)] {
            let rh = hyperbolic_radius_of(r, k).unwrap();
            let expected = 2.0 * r / (1.0 + k * r * r);
            assert_relative_eq!(
                isometric_sphere_radius(rh, k).unwrap(),
                expected,
                max_relative = 1e-10
            );
        }
        assert_relative_eq!(
            isometric_sphere_radius(hyperbolic_radius_of(0.5, -1.0).unwrap(), -1.0).unwrap(),
            4.0 / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn spherical_distance_quarter_and_half_circle() {
        assert_eq!(spherical_distance(&[1.0, 0.0], &[1.0, 0.0], 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            spherical_distance(&[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap(),
            std::f64::consts::FRAC_PI_2,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spherical_distance(&[1.0, 0.0], &[-1.0, 0.0], 1.0).unwrap(),
            std::f64::consts::PI,
            max_relative = 1e-12
        );
        // off-sphere input rejected
        assert!(spherical_distance(&[0.5, 0.0], &[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn chordal_distance_examples() {
        assert_eq!(chordal_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(
            chordal_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            std::f64::consts::SQRT_2,
            max_relative = 1e-15
        );
        assert!(chordal_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn space_constructors_enforce_invariants() {
        assert!(CurvatureSpace::poincare_ball(0.1, 0.001).is_err());
        assert!(CurvatureSpace::poincare_ball(-1.0, 0.0).is_err());
        assert!(CurvatureSpace::fixed_radius_sphere(-1.0).is_err());
        let s = CurvatureSpace::sphere_with_radius(12.909944487358056).unwrap();
        assert_relative_eq!(s.curvature(), 0.006, max_relative = 1e-12);
        assert_relative_eq!(s.sphere_radius().unwrap(), 12.909944487358056, max_relative = 1e-12);
        let p = CurvatureSpace::poincare_ball(-0.05, 0.001).unwrap();
        assert_relative_eq!(p.effective_radius().unwrap(), 4.46766381904458, max_relative = 1e-12);
    }

    #[test]
    fn point_validation_per_space() {
        let e = CurvatureSpace::euclidean_squared();
        assert!(e.validate_point(&[1e12, -3.0]).is_ok());
        assert!(e.validate_point(&[f64::NAN]).is_err());

        let p = CurvatureSpace::poincare_ball(-1.0, 0.001).unwrap();
        assert!(p.validate_point(&[0.7, 0.7]).is_err());
        assert!(p.validate_point(&[0.5, 0.5]).is_ok());

        let s = CurvatureSpace::sphere_with_radius(10.0).unwrap();
        assert!(s.validate_point(&[10.0, 0.0]).is_ok());
        assert!(s.validate_point(&[9.0, 0.0]).is_err());
    }
}
