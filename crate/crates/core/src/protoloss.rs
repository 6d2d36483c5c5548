//! Prototypical classification: probabilities, loss, centroids, encoder
//! output maps, and analytic gradients.
//!
//! A query embedding `z` is classified against per-class centroids `w_c` by a
//! softmax over negative distances in the chosen [`CurvatureSpace`]; the loss
//! for a labelled query is its negative log likelihood
//! `d(w_c, z) + log Σ_k exp(-d(w_k, z))`.
//!
//! Gradients are analytic per operation (the operation set is small and
//! closed), each validated against central finite differences in the tests.
//! Under [`GradientMode::RiemannianScaled`] the Euclidean query gradient is
//! scaled by `λ(z)^{-2}`, the inverse Poincaré metric tensor.

use crate::error::{Error, Result};
use crate::geometry::poincare::{
    conformal_factor_slice, poincare_distance_grad_slice, poincare_distance_slice,
};
use crate::geometry::{chordal_distance, CurvatureSpace};
use crate::numeric::{log_sum_exp, softmax};
use crate::vecmath;

/// Optional cap on the Euclidean feature magnitude before projection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClipConfig {
    max_norm: Option<f64>,
}

impl ClipConfig {
    pub fn none() -> Self {
        ClipConfig { max_norm: None }
    }

    pub fn clip(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "clip magnitude must be positive and finite, got {c}"
            )));
        }
        Ok(ClipConfig { max_norm: Some(c) })
    }

    pub fn max_norm(&self) -> Option<f64> {
        self.max_norm
    }

    pub fn is_clipping(&self) -> bool {
        self.max_norm.is_some()
    }
}

/// How the loss gradient w.r.t. a Poincaré query embedding is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Backpropagate the Euclidean gradient as is.
    EuclideanBackprop,
    /// Scale by the inverse metric tensor, `λ(z)^{-2} ∇_z L`. Only valid in
    /// the Poincaré ball.
    RiemannianScaled,
}

/// Per-class centroids, all valid points of one space.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    space: CurvatureSpace,
    centroids: Vec<Vec<f64>>,
}

impl PrototypeSet {
    pub fn new(space: CurvatureSpace, centroids: Vec<Vec<f64>>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::InvalidArgument("prototype set is empty".into()));
        }
        let dim = centroids[0].len();
        for c in &centroids {
            if c.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.len() });
            }
            space.validate_point(c)?;
        }
        Ok(PrototypeSet { space, centroids })
    }

    pub fn space(&self) -> &CurvatureSpace {
        &self.space
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

/// Distance used by the space: `‖x-y‖^2` (squared Euclidean), the Poincaré
/// geodesic distance, or the chordal `ℓ2` on the fixed-radius sphere.
pub fn space_distance(space: &CurvatureSpace, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    space.validate_point(x)?;
    space.validate_point(y)?;
    match *space {
        CurvatureSpace::EuclideanSquared => Ok(vecmath::dist_sq(x, y)),
        CurvatureSpace::PoincareBall { k, .. } => poincare_distance_slice(x, y, k),
        CurvatureSpace::FixedRadiusSphere { .. } => chordal_distance(x, y),
    }
}

/// Softmax over negative distances to each prototype.
pub fn class_probabilities(prototypes: &PrototypeSet, z: &[f64]) -> Result<Vec<f64>> {
    let neg = neg_distances(prototypes, z)?;
    Ok(softmax(&neg))
}

/// Negative log likelihood summed over labelled queries:
/// `Σ_i [ d(w_{c_i}, x_i) + log Σ_k exp(-d(w_k, x_i)) ]`.
pub fn prototypical_loss(prototypes: &PrototypeSet, queries: &[(Vec<f64>, usize)]) -> Result<f64> {
    if prototypes.len() < 2 {
        return Err(Error::InvalidArgument("loss needs at least 2 prototypes".into()));
    }
    let mut total = 0.0;
    for (x, label) in queries {
        if *label >= prototypes.len() {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {} prototypes",
                prototypes.len()
            )));
        }
        let neg = neg_distances(prototypes, x)?;
        total += -neg[*label] + log_sum_exp(&neg);
    }
    Ok(total)
}

/// Arithmetic mean of the points.
pub fn euclidean_centroid(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = points.first().ok_or_else(|| {
        Error::InvalidArgument("centroid of an empty point set".into())
    })?;
    let dim = first.len();
    let mut acc = vec![0.0; dim];
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        vecmath::axpy(&mut acc, 1.0, p);
    }
    let inv = 1.0 / points.len() as f64;
    for a in acc.iter_mut() {
        *a *= inv;
    }
    Ok(acc)
}

/// Einstein midpoint of Poincaré ball points: map to the Klein model,
/// average with Lorentz-factor weights `γ_i = 1/sqrt(1 - |k|‖κ_i‖^2)`, map
/// back. For two points the result lies on the geodesic between them (Klein
/// geodesics are chords), which the tests verify via betweenness.
pub fn einstein_midpoint(points: &[Vec<f64>], k: f64) -> Result<Vec<f64>> {
    crate::geometry::check_negative_curvature(k)?;
    let first = points.first().ok_or_else(|| {
        Error::InvalidArgument("midpoint of an empty point set".into())
    })?;
    let dim = first.len();
    let abs_k = -k;
    let mut acc = vec![0.0; dim];
    let mut weight_sum = 0.0;
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        let n2 = vecmath::norm_sq(p);
        if !(n2 < 1.0 / abs_k) {
            return Err(Error::InvalidPoint(format!(
                "midpoint input with squared norm {n2} outside the ball"
            )));
        }
        // Poincaré -> Klein at this curvature
        let klein_scale = 2.0 / (1.0 + abs_k * n2);
        let klein_n2 = klein_scale * klein_scale * n2;
        let gamma = 1.0 / (1.0 - abs_k * klein_n2).max(f64::MIN_POSITIVE).sqrt();
        vecmath::axpy(&mut acc, gamma * klein_scale, p);
        weight_sum += gamma;
    }
    let inv = 1.0 / weight_sum;
    for a in acc.iter_mut() {
        *a *= inv;
    }
    // Klein -> Poincaré
    let n2 = vecmath::norm_sq(&acc);
    let back = 1.0 / (1.0 + (1.0 - abs_k * n2).max(0.0).sqrt());
    for a in acc.iter_mut() {
        *a *= back;
    }
    Ok(acc)
}

/// Cap the Euclidean feature magnitude: rescale to norm `c` when above it.
/// Idempotent; identity when no clip is configured.
pub fn clip_features(v: &[f64], cfg: &ClipConfig) -> Vec<f64> {
    match cfg.max_norm {
        None => v.to_vec(),
        Some(c) => {
            let n = vecmath::norm(v);
            if n > c {
                vecmath::scale(v, c / n)
            } else {
                v.to_vec()
            }
        }
    }
}

/// Rescale to norm exactly `r`, preserving direction. The zero vector has no
/// direction and is a degenerate input.
pub fn fixed_radius_rescale(v: &[f64], r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let n = vecmath::norm(v);
    if n == 0.0 {
        return Err(Error::DegenerateInput("cannot rescale the zero vector".into()));
    }
    Ok(vecmath::scale(v, r / n))
}

/// Loss gradient with respect to each query embedding.
///
/// For query `x` with label `c`:
/// `∂L/∂x = (1 - p_c) g_c(x) - Σ_{k≠c} p_k g_k(x)` written as
/// `g_c(x) - Σ_k p_k g_k(x)`, with `g_k = ∂d(w_k, ·)/∂x` per space.
/// A Poincaré or sphere query coinciding with a prototype has no gradient
/// direction and errors.
pub fn loss_gradient(
    prototypes: &PrototypeSet,
    queries: &[(Vec<f64>, usize)],
    mode: GradientMode,
) -> Result<Vec<Vec<f64>>> {
    if mode == GradientMode::RiemannianScaled
        && !matches!(prototypes.space(), CurvatureSpace::PoincareBall { .. })
    {
        return Err(Error::InvalidArgument(
            "RiemannianScaled gradients are only defined in the Poincaré ball".into(),
        ));
    }
    let mut out = Vec::with_capacity(queries.len());
    for (qi, (x, label)) in queries.iter().enumerate() {
        if *label >= prototypes.len() {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {} prototypes",
                prototypes.len()
            )));
        }
        let probs = class_probabilities(prototypes, x)?;
        let mut grad = vec![0.0; x.len()];
        for (ci, w) in prototypes.centroids().iter().enumerate() {
            let coeff = if ci == *label { 1.0 - probs[ci] } else { -probs[ci] };
            if coeff == 0.0 {
                continue;
            }
            let g = distance_grad(prototypes.space(), w, x)
                .map_err(|e| match e {
                    Error::NumericDomain(_) => Error::SingularGradient { query: qi },
                    other => other,
                })?;
            vecmath::axpy(&mut grad, coeff, &g);
        }
        if mode == GradientMode::RiemannianScaled {
            let lambda = conformal_factor_slice(x, prototypes.space().curvature());
            let scale = 1.0 / (lambda * lambda);
            for g in grad.iter_mut() {
                *g *= scale;
            }
        }
        out.push(grad);
    }
    Ok(out)
}

/// `∂ d(w, x) / ∂x` for the space's distance.
fn distance_grad(space: &CurvatureSpace, w: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    match *space {
        CurvatureSpace::EuclideanSquared => {
            Ok(x.iter().zip(w).map(|(xi, wi)| 2.0 * (xi - wi)).collect())
        }
        CurvatureSpace::PoincareBall { k, .. } => poincare_distance_grad_slice(w, x, k),
        CurvatureSpace::FixedRadiusSphere { .. } => {
            let n = vecmath::dist_sq(w, x).sqrt();
            if n == 0.0 {
                return Err(Error::NumericDomain(
                    "chordal gradient at coincident points".into(),
                ));
            }
            Ok(x.iter().zip(w).map(|(xi, wi)| (xi - wi) / n).collect())
        }
    }
}

fn neg_distances(prototypes: &PrototypeSet, z: &[f64]) -> Result<Vec<f64>> {
    prototypes
        .centroids()
        .iter()
        .map(|w| space_distance(prototypes.space(), w, z).map(|d| -d))
        .collect()
}

/// Valid prototypes for a sphere: centroid of norm-`r` points generally has
/// norm below `r`, so it is pushed back onto the sphere unless disabled.
pub fn sphere_prototype(points: &[Vec<f64>], r: f64, renormalize: bool) -> Result<Vec<f64>> {
    let mean = euclidean_centroid(points)?;
    if renormalize {
        fixed_radius_rescale(&mean, r)
    } else {
        Ok(mean)
    }
}
