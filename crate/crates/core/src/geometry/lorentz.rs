//! Hyperboloid (Lorentz) model of hyperbolic space.
//!
//! Points live on the upper sheet `{x ∈ R^{d,1} : <x,x>_L = 1/k, x_{d+1} > 0}`
//! with curvature `k < 0`, where `<x,y>_L = Σ_{i≤d} x_i y_i - x_{d+1} y_{d+1}`
//! is the Lorentz pseudometric. The form is positive definite on tangent
//! spaces, which makes geodesic formulas below well posed.

use crate::error::{Error, Result};
use crate::numeric::{acosh_arg, stable_acosh};
use crate::vecmath;

use super::check_negative_curvature;

/// Relative tolerance for the on-sheet constraint `<x,x>_L = 1/k`.
const SHEET_TOL: f64 = 1e-9;
/// Absolute tolerance for tangency `<base, v>_L = 0`.
const TANGENT_TOL: f64 = 1e-9;

/// A point on the upper hyperboloid sheet. Coordinates have length `d + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperboloidPoint {
    coords: Vec<f64>,
    k: f64,
}

impl HyperboloidPoint {
    /// Validates the sheet constraint (relative tolerance 1e-9) and the
    /// upper-sheet condition `x_{d+1} > 0`.
    pub fn new(coords: Vec<f64>, k: f64) -> Result<Self> {
        check_negative_curvature(k)?;
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: coords.len() });
        }
        let q = lorentz_inner(&coords, &coords)?;
        let target = 1.0 / k;
        if (q - target).abs() > SHEET_TOL * target.abs() {
            return Err(Error::InvalidPoint(format!(
                "<x,x>_L = {q} differs from 1/k = {target} beyond relative tolerance {SHEET_TOL:e}"
            )));
        }
        if !(coords[coords.len() - 1] > 0.0) {
            return Err(Error::InvalidPoint("last coordinate must be positive (upper sheet)".into()));
        }
        Ok(HyperboloidPoint { coords, k })
    }

    /// Apex `(0, ..., 0, 1/sqrt(-k))`, the image of the ball origin.
    pub fn apex(dim: usize, k: f64) -> Result<Self> {
        check_negative_curvature(k)?;
        let mut coords = vec![0.0; dim + 1];
        coords[dim] = 1.0 / (-k).sqrt();
        Ok(HyperboloidPoint { coords, k })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn curvature(&self) -> f64 {
        self.k
    }

    /// Intrinsic dimension `d` (one less than the coordinate length).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub(crate) fn from_parts_unchecked(coords: Vec<f64>, k: f64) -> Self {
        HyperboloidPoint { coords, k }
    }
}

/// A tangent vector attached to a hyperboloid point, `<base, v>_L = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperboloidTangent {
    coords: Vec<f64>,
    base: HyperboloidPoint,
}

impl HyperboloidTangent {
    /// Validates tangency within absolute tolerance 1e-9.
    pub fn new(base: HyperboloidPoint, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != base.coords.len() {
            return Err(Error::DimensionMismatch { expected: base.coords.len(), got: coords.len() });
        }
        let ip = lorentz_inner(&base.coords, &coords)?;
        if ip.abs() > TANGENT_TOL {
            return Err(Error::NotTangent(ip));
        }
        Ok(HyperboloidTangent { coords, base })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn base(&self) -> &HyperboloidPoint {
        &self.base
    }

    /// Lorentz norm `sqrt(<v,v>_L)`; nonnegative on tangent spaces.
    pub fn lorentz_norm(&self) -> f64 {
        lorentz_inner(&self.coords, &self.coords)
            .expect("equal lengths by construction")
            .max(0.0)
            .sqrt()
    }
}

/// Lorentz pseudometric `Σ_{i=1..d} x_i y_i - x_{d+1} y_{d+1}`.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: x.len() });
    }
    let last = x.len() - 1;
    let spatial = vecmath::dot(&x[..last], &y[..last]);
    Ok(spatial - x[last] * y[last])
}

/// Geodesic distance `(1/sqrt(-k)) acosh(k <x,y>_L)`.
///
/// The acosh argument is clamped to 1 when within 1e-9 of it; values below
/// that are a domain error.
pub fn hyperboloid_distance(x: &HyperboloidPoint, y: &HyperboloidPoint) -> Result<f64> {
    check_same_chart(x, y)?;
    let arg = acosh_arg(x.k * lorentz_inner(&x.coords, &y.coords)?, 1e-9)?;
    Ok(stable_acosh(arg) / (-x.k).sqrt())
}

/// Exponential map `cosh(‖v‖_L sqrt(-k)) x + sinh(‖v‖_L sqrt(-k)) v/(‖v‖_L sqrt(-k))`.
///
/// Follows the geodesic leaving the base point of `v` with initial velocity
/// `v`; `‖v‖_L = 0` returns the base point (the limit of the map).
pub fn hyperboloid_exp(v: &HyperboloidTangent) -> Result<HyperboloidPoint> {
    let base = &v.base;
    let s = (-base.k).sqrt();
    let vnorm = v.lorentz_norm();
    let t = vnorm * s;
    if t == 0.0 {
        return Ok(base.clone());
    }
    let ch = t.cosh();
    let sc = t.sinh() / t;
    let coords: Vec<f64> =
        base.coords.iter().zip(&v.coords).map(|(b, vi)| ch * b + sc * vi).collect();
    HyperboloidPoint::new(coords, base.k)
}

/// Inclusion map `u ↦ (u_1, ..., u_d, sqrt(‖u‖^2 - 1/k))`, lifting local
/// coordinates onto the sheet. Satisfies the sheet constraint by construction.
pub fn inclusion(u: &[f64], k: f64) -> Result<HyperboloidPoint> {
    check_negative_curvature(k)?;
    let mut coords = Vec::with_capacity(u.len() + 1);
    coords.extend_from_slice(u);
    coords.push((vecmath::norm_sq(u) - 1.0 / k).sqrt());
    Ok(HyperboloidPoint::from_parts_unchecked(coords, k))
}

fn check_same_chart(x: &HyperboloidPoint, y: &HyperboloidPoint) -> Result<()> {
    if x.k != y.k {
        return Err(Error::CurvatureMismatch { left: x.k, right: y.k });
    }
    if x.coords.len() != y.coords.len() {
        return Err(Error::DimensionMismatch { expected: x.coords.len(), got: y.coords.len() });
    }
    Ok(())
}
