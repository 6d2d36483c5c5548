//! Poincaré ball model of hyperbolic space.
//!
//! The ball `{u ∈ R^d : ‖u‖^2 < -1/k}` carries the conformal metric
//! `λ(u)^2 I` with `λ(u) = 2/(1 + k ‖u‖^2)`; the boundary is at infinity.
//! The model is obtained from the hyperboloid by stereographic projection
//! through the origin, and the two distance formulas agree through that map.

use crate::error::{Error, Result};
use crate::numeric::{acosh_arg, stable_acosh};
use crate::vecmath;

use super::check_negative_curvature;
use super::lorentz::HyperboloidPoint;

/// Magnitudes are clamped to this fraction of the ball radius to keep results
/// strictly inside the open ball.
const BALL_CLAMP: f64 = 1.0 - 1e-12;

/// A point strictly inside the Poincaré ball of curvature `k < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincarePoint {
    coords: Vec<f64>,
    k: f64,
}

impl PoincarePoint {
    /// Validates `‖coords‖^2 < -1/k` strictly.
    pub fn new(coords: Vec<f64>, k: f64) -> Result<Self> {
        check_negative_curvature(k)?;
        let n2 = vecmath::norm_sq(&coords);
        if !(n2 < -1.0 / k) {
            return Err(Error::InvalidPoint(format!(
                "squared norm {n2} is not strictly inside the ball of radius^2 {}",
                -1.0 / k
            )));
        }
        Ok(PoincarePoint { coords, k })
    }

    pub fn origin(dim: usize, k: f64) -> Result<Self> {
        check_negative_curvature(k)?;
        Ok(PoincarePoint { coords: vec![0.0; dim], k })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn curvature(&self) -> f64 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        vecmath::norm(&self.coords)
    }

    fn check_compatible(&self, other: &PoincarePoint) -> Result<()> {
        if self.k != other.k {
            return Err(Error::CurvatureMismatch { left: self.k, right: other.k });
        }
        if self.coords.len() != other.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coords.len(),
                got: other.coords.len(),
            });
        }
        Ok(())
    }
}

/// Conformal factor `λ(u) = 2/(1 + k ‖u‖^2)`; equals 2 at the origin and
/// diverges toward the boundary.
pub fn conformal_factor(u: &PoincarePoint) -> f64 {
    conformal_factor_slice(u.coords(), u.k)
}

pub(crate) fn conformal_factor_slice(u: &[f64], k: f64) -> f64 {
    2.0 / (1.0 + k * vecmath::norm_sq(u))
}

/// Stereographic projection `Π(x) = (x_1, ..., x_d) / (1 + sqrt(-k) x_{d+1})`
/// from the hyperboloid onto the ball.
pub fn stereographic(x: &HyperboloidPoint) -> PoincarePoint {
    let k = x.curvature();
    let c = x.coords();
    let denom = 1.0 + (-k).sqrt() * c[c.len() - 1];
    let coords: Vec<f64> = c[..c.len() - 1].iter().map(|v| v / denom).collect();
    // on-sheet input lands strictly inside the ball; clamp guards rounding
    PoincarePoint { coords: clamp_into_ball(coords, k), k }
}

/// Inverse projection `Π^{-1}(u) = (λ(u) u, (λ(u) - 1)/sqrt(-k))`.
pub fn inverse_stereographic(u: &PoincarePoint) -> Result<HyperboloidPoint> {
    let lambda = conformal_factor(u);
    let s = (-u.k).sqrt();
    let mut coords = vecmath::scale(&u.coords, lambda);
    coords.push((lambda - 1.0) / s);
    Ok(HyperboloidPoint::from_parts_unchecked(coords, u.k))
}

/// Exponential map at the origin, `tanh(sqrt(-k) ‖v‖) v / (sqrt(-k) ‖v‖)`.
///
/// `v = 0` maps to the origin (the limit of the formula). The output is
/// strictly inside the ball for every finite `v`.
pub fn poincare_exp0(v: &[f64], k: f64) -> Result<PoincarePoint> {
    check_negative_curvature(k)?;
    let s = (-k).sqrt();
    let n = vecmath::norm(v);
    if n == 0.0 {
        return Ok(PoincarePoint { coords: vec![0.0; v.len()], k });
    }
    let scale = (s * n).tanh() / (s * n);
    Ok(PoincarePoint { coords: clamp_into_ball(vecmath::scale(v, scale), k), k })
}

/// Möbius addition
/// `x ⊕ y = ((1 - 2k<x,y> - k‖y‖^2) x + (1 + k‖x‖^2) y) / (1 - 2k<x,y> + k^2 ‖x‖^2 ‖y‖^2)`.
///
/// Non-commutative. The result is clamped to stay strictly inside the ball;
/// a vanishing denominator (antipodal near-boundary operands) is an error.
pub fn mobius_add(x: &PoincarePoint, y: &PoincarePoint) -> Result<PoincarePoint> {
    x.check_compatible(y)?;
    let coords = mobius_add_slice(x.coords(), y.coords(), x.k)?;
    Ok(PoincarePoint { coords, k: x.k })
}

pub(crate) fn mobius_add_slice(x: &[f64], y: &[f64], k: f64) -> Result<Vec<f64>> {
    let xy = vecmath::dot(x, y);
    let nx = vecmath::norm_sq(x);
    let ny = vecmath::norm_sq(y);
    let denom = 1.0 - 2.0 * k * xy + k * k * nx * ny;
    if denom.abs() < 1e-15 {
        return Err(Error::NumericDomain(format!("Möbius denominator {denom:e} vanishes")));
    }
    let cx = (1.0 - 2.0 * k * xy - k * ny) / denom;
    let cy = (1.0 + k * nx) / denom;
    let out: Vec<f64> = x.iter().zip(y).map(|(a, b)| cx * a + cy * b).collect();
    Ok(clamp_into_ball(out, k))
}

/// Geodesic distance `(2/sqrt(-k)) atanh(sqrt(-k) ‖-x ⊕ y‖)`.
pub fn poincare_distance(x: &PoincarePoint, y: &PoincarePoint) -> Result<f64> {
    x.check_compatible(y)?;
    poincare_distance_slice(x.coords(), y.coords(), x.k)
}

pub(crate) fn poincare_distance_slice(x: &[f64], y: &[f64], k: f64) -> Result<f64> {
    let neg_x: Vec<f64> = x.iter().map(|v| -v).collect();
    let m = mobius_add_slice(&neg_x, y, k)?;
    let s = (-k).sqrt();
    let mut arg = s * vecmath::norm(&m);
    if arg >= 1.0 {
        if arg < 1.0 + 1e-12 {
            arg = BALL_CLAMP;
        } else {
            return Err(Error::NumericDomain(format!(
                "atanh argument {arg} at or beyond 1"
            )));
        }
    }
    Ok(2.0 * arg.atanh() / s)
}

/// Gradient of `d(w, x)` with respect to `x`, both strictly inside the ball.
///
/// Uses the algebraically equivalent form
/// `d = (1/sqrt(-k)) acosh(1 - 2k ‖x-w‖^2 / (B_w B_x))`, `B_u = 1 + k‖u‖^2`,
/// whose derivative is rational in the coordinates. Coincident inputs have no
/// defined gradient direction and are reported via `Error::SingularGradient`
/// by the caller; here they surface as a domain error.
pub(crate) fn poincare_distance_grad_slice(w: &[f64], x: &[f64], k: f64) -> Result<Vec<f64>> {
    let n = vecmath::dist_sq(w, x);
    if n == 0.0 {
        return Err(Error::NumericDomain("distance gradient at coincident points".into()));
    }
    let bw = 1.0 + k * vecmath::norm_sq(w);
    let bx = 1.0 + k * vecmath::norm_sq(x);
    let a = 1.0 - 2.0 * k * n / (bw * bx);
    let root = (a * a - 1.0).max(0.0).sqrt();
    if root == 0.0 {
        return Err(Error::NumericDomain("distance gradient at coincident points".into()));
    }
    let s = (-k).sqrt();
    let c1 = -4.0 * k / (bw * bx) / (s * root);
    let c2 = 4.0 * k * k * n / (bw * bx * bx) / (s * root);
    let grad: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| c1 * (xi - wi) + c2 * xi).collect();
    Ok(grad)
}

/// Hyperbolic distance between two ball points of equal Euclidean norm `r`
/// separated by angle `alpha`:
/// `(1/sqrt(-k)) acosh(a + b cos α)` with
/// `a = ((1 - k r^2)/(1 + k r^2))^2` and `b = 4 k r^2/(1 + k r^2)^2`.
pub fn fixed_radius_hyperbolic_distance(r: f64, alpha: f64, k: f64) -> Result<f64> {
    check_negative_curvature(k)?;
    let ball_r = 1.0 / (-k).sqrt();
    if !(0.0..ball_r).contains(&r) {
        return Err(Error::NumericDomain(format!("radius {r} must lie in [0, {ball_r})")));
    }
    if !(0.0..=std::f64::consts::PI).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} must lie in [0, pi]")));
    }
    let kr2 = k * r * r;
    let a = ((1.0 - kr2) / (1.0 + kr2)).powi(2);
    let b = 4.0 * kr2 / (1.0 + kr2).powi(2);
    let arg = acosh_arg(a + b * alpha.cos(), 1e-12)?;
    Ok(stable_acosh(arg) / (-k).sqrt())
}

fn clamp_into_ball(mut coords: Vec<f64>, k: f64) -> Vec<f64> {
    let max_norm = BALL_CLAMP / (-k).sqrt();
    let n = vecmath::norm(&coords);
    if n > max_norm {
        let f = max_norm / n;
        for c in coords.iter_mut() {
            *c *= f;
        }
    }
    coords
}
