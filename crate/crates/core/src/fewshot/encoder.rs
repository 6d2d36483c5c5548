//! Two-layer perceptron encoder, the per-space output projections, and their
//! analytic backward passes.
//!
//! The encoder is `input_dim -> hidden_dim -> output_dim` with a tanh after
//! the first layer. Its features are turned into valid points of the chosen
//! space: identity (squared Euclidean), clip + origin exponential map + cap at
//! the effective radius (Poincaré ball), or rescaling to fixed norm (sphere).
//! Each projection has a hand-written vector-Jacobian product so episodic
//! training needs no autodiff tape.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{clipped_radius, CurvatureSpace};
use crate::protoloss::ClipConfig;
use crate::vecmath;

/// How encoder features become points of the space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    pub space: CurvatureSpace,
    pub clip: ClipConfig,
    /// Added to the feature norm before the fixed-radius division; guards the
    /// zero-direction singularity during training.
    pub norm_epsilon: f64,
}

impl ProjectionConfig {
    pub fn new(space: CurvatureSpace, clip: ClipConfig, norm_epsilon: f64) -> Result<Self> {
        if clip.is_clipping() && !matches!(space, CurvatureSpace::PoincareBall { .. }) {
            return Err(Error::Config("feature clipping only applies to the Poincaré ball".into()));
        }
        if !(norm_epsilon >= 0.0) || !norm_epsilon.is_finite() {
            return Err(Error::Config(format!("norm_epsilon must be nonnegative, got {norm_epsilon}")));
        }
        Ok(ProjectionConfig { space, clip, norm_epsilon })
    }

    pub fn plain(space: CurvatureSpace) -> Result<Self> {
        Self::new(space, ClipConfig::none(), 1e-12)
    }

    /// The norm every Poincaré embedding is capped at: the clipped radius when
    /// clipping is configured, the effective radius otherwise.
    pub fn poincare_cap(&self) -> Option<f64> {
        match self.space {
            CurvatureSpace::PoincareBall { k, epsilon } => {
                let r_eff = (1.0 - epsilon) / (-k).sqrt();
                Some(match self.clip.max_norm() {
                    Some(c) => clipped_radius(c, k).expect("validated").min(r_eff),
                    None => r_eff,
                })
            }
            _ => None,
        }
    }
}

/// Weights, biases, and Adam moment buffers of the encoder, stored flat as
/// `[w1 | b1 | w2 | b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    theta: Vec<f64>,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    adam_step: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl EncoderParams {
    /// Glorot-uniform weights (`±sqrt(6/(fan_in + fan_out))`), zero biases.
    pub fn init(input_dim: usize, hidden_dim: usize, output_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let n = hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
        let mut theta = vec![0.0; n];
        let bound1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        for w in theta[..hidden_dim * input_dim].iter_mut() {
            *w = rng.gen_range(-bound1..bound1);
        }
        let w2_start = hidden_dim * input_dim + hidden_dim;
        let bound2 = (6.0 / (hidden_dim + output_dim) as f64).sqrt();
        for w in theta[w2_start..w2_start + output_dim * hidden_dim].iter_mut() {
            *w = rng.gen_range(-bound2..bound2);
        }
        EncoderParams {
            input_dim,
            hidden_dim,
            output_dim,
            theta,
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
            adam_step: 0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    fn w1(&self) -> &[f64] {
        &self.theta[..self.hidden_dim * self.input_dim]
    }

    fn b1(&self) -> &[f64] {
        let s = self.hidden_dim * self.input_dim;
        &self.theta[s..s + self.hidden_dim]
    }

    pub(crate) fn w2(&self) -> &[f64] {
        let s = self.hidden_dim * self.input_dim + self.hidden_dim;
        &self.theta[s..s + self.output_dim * self.hidden_dim]
    }

    fn b2(&self) -> &[f64] {
        let s = self.hidden_dim * self.input_dim + self.hidden_dim + self.output_dim * self.hidden_dim;
        &self.theta[s..]
    }

    /// Raw features `f(x)`; hidden activations are returned for backprop.
    pub(crate) fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let mut hidden = vec![0.0; self.hidden_dim];
        for j in 0..self.hidden_dim {
            let row = &self.w1()[j * self.input_dim..(j + 1) * self.input_dim];
            hidden[j] = (self.b1()[j] + vecmath::dot(row, x)).tanh();
        }
        let mut features = vec![0.0; self.output_dim];
        for o in 0..self.output_dim {
            let row = &self.w2()[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            features[o] = self.b2()[o] + vecmath::dot(row, &hidden);
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericDomain("non-finite encoder activation".into()));
        }
        Ok((features, hidden))
    }

    /// One Adam step over the flat parameter vector.
    pub(crate) fn adam_update(&mut self, grads: &GradBuffer, lr: f64) {
        debug_assert_eq!(grads.theta.len(), self.theta.len());
        self.adam_step += 1;
        let t = self.adam_step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for i in 0..self.theta.len() {
            let g = grads.theta[i];
            self.adam_m[i] = ADAM_BETA1 * self.adam_m[i] + (1.0 - ADAM_BETA1) * g;
            self.adam_v[i] = ADAM_BETA2 * self.adam_v[i] + (1.0 - ADAM_BETA2) * g * g;
            let mhat = self.adam_m[i] / bc1;
            let vhat = self.adam_v[i] / bc2;
            self.theta[i] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub(crate) struct GradBuffer {
    theta: Vec<f64>,
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
}

impl GradBuffer {
    pub(crate) fn zeros_like(p: &EncoderParams) -> Self {
        GradBuffer {
            theta: vec![0.0; p.theta.len()],
            input_dim: p.input_dim,
            hidden_dim: p.hidden_dim,
            output_dim: p.output_dim,
        }
    }

    /// Accumulate the sample gradient given `d loss / d features`.
    pub(crate) fn accumulate(&mut self, x: &[f64], hidden: &[f64], g_features: &[f64], w2: &[f64]) {
        let (i_dim, h_dim, o_dim) = (self.input_dim, self.hidden_dim, self.output_dim);
        let w1_len = h_dim * i_dim;
        let w2_start = w1_len + h_dim;
        let b2_start = w2_start + o_dim * h_dim;

        // output layer
        for o in 0..o_dim {
            self.theta[b2_start + o] += g_features[o];
            let row = &mut self.theta[w2_start + o * h_dim..w2_start + (o + 1) * h_dim];
            for (j, r) in row.iter_mut().enumerate() {
                *r += g_features[o] * hidden[j];
            }
        }
        // back through tanh into the first layer
        for j in 0..h_dim {
            let mut gh = 0.0;
            for o in 0..o_dim {
                gh += w2[o * h_dim + j] * g_features[o];
            }
            let ga = gh * (1.0 - hidden[j] * hidden[j]);
            self.theta[w1_len + j] += ga;
            let row = &mut self.theta[j * i_dim..(j + 1) * i_dim];
            for (i, r) in row.iter_mut().enumerate() {
                *r += ga * x[i];
            }
        }
    }
}

/// Cache of the projection intermediates needed by its backward pass.
#[derive(Debug, Clone)]
pub(crate) enum ProjCache {
    Identity,
    Poincare { clipped: Vec<f64>, pre_cap: Vec<f64> },
    Sphere { feature_norm: f64 },
}

/// Project raw features into the space. Returns the embedding and the cache.
pub(crate) fn project_features(features: &[f64], proj: &ProjectionConfig) -> Result<(Vec<f64>, ProjCache)> {
    match proj.space {
        CurvatureSpace::EuclideanSquared => Ok((features.to_vec(), ProjCache::Identity)),
        CurvatureSpace::PoincareBall { k, .. } => {
            let clipped = crate::protoloss::clip_features(features, &proj.clip);
            let pre_cap = crate::geometry::poincare_exp0(&clipped, k)?.coords().to_vec();
            let cap = proj.poincare_cap().expect("poincare space");
            let z = norm_clip(&pre_cap, cap);
            Ok((z, ProjCache::Poincare { clipped, pre_cap }))
        }
        CurvatureSpace::FixedRadiusSphere { k } => {
            let n = vecmath::norm(features);
            if n == 0.0 {
                return Err(Error::DegenerateInput(
                    "zero feature vector has no direction on the sphere".into(),
                ));
            }
            let r = 1.0 / k.sqrt();
            let z = vecmath::scale(features, r / (n + proj.norm_epsilon));
            Ok((z, ProjCache::Sphere { feature_norm: n }))
        }
    }
}

/// Vector-Jacobian product of the projection: maps `d loss / d embedding`
/// back to `d loss / d features`.
pub(crate) fn project_backward(
    features: &[f64],
    cache: &ProjCache,
    g_embedding: &[f64],
    proj: &ProjectionConfig,
) -> Vec<f64> {
    match (cache, proj.space) {
        (ProjCache::Identity, _) => g_embedding.to_vec(),
        (ProjCache::Poincare { clipped, pre_cap }, CurvatureSpace::PoincareBall { k, .. }) => {
            let cap = proj.poincare_cap().expect("poincare space");
            let g = norm_clip_vjp(pre_cap, cap, g_embedding);
            let g = exp0_vjp(clipped, k, &g);
            match proj.clip.max_norm() {
                Some(c) => norm_clip_vjp(features, c, &g),
                None => g,
            }
        }
        (ProjCache::Sphere { feature_norm }, CurvatureSpace::FixedRadiusSphere { k }) => {
            let r = 1.0 / k.sqrt();
            let n = *feature_norm;
            let ne = n + proj.norm_epsilon;
            let fg = vecmath::dot(features, g_embedding);
            let mut out = vecmath::scale(g_embedding, r / ne);
            vecmath::axpy(&mut out, -r * fg / (n * ne * ne), features);
            out
        }
        _ => unreachable!("cache kind always matches the projection space"),
    }
}

/// Encode a batch of inputs into valid points of the space.
pub fn encode(
    params: &EncoderParams,
    inputs: &[Vec<f64>],
    proj: &ProjectionConfig,
) -> Result<Vec<Vec<f64>>> {
    inputs
        .iter()
        .map(|x| {
            let (features, _) = params.forward(x)?;
            let (z, _) = project_features(&features, proj)?;
            Ok(z)
        })
        .collect()
}

fn norm_clip(v: &[f64], max_norm: f64) -> Vec<f64> {
    let n = vecmath::norm(v);
    if n > max_norm {
        vecmath::scale(v, max_norm / n)
    } else {
        v.to_vec()
    }
}

fn norm_clip_vjp(v: &[f64], max_norm: f64, g: &[f64]) -> Vec<f64> {
    let n = vecmath::norm(v);
    if n > max_norm {
        let vg = vecmath::dot(v, g);
        let mut out = vecmath::scale(g, max_norm / n);
        vecmath::axpy(&mut out, -max_norm * vg / (n * n * n), v);
        out
    } else {
        g.to_vec()
    }
}

/// VJP of `v ↦ tanh(s‖v‖) v/(s‖v‖)` with `s = sqrt(-k)`.
fn exp0_vjp(v: &[f64], k: f64, g: &[f64]) -> Vec<f64> {
    let s = (-k).sqrt();
    let u = vecmath::norm(v);
    if u < 1e-300 {
        return g.to_vec();
    }
    let su = s * u;
    let th = su.tanh();
    let t = th / su;
    let sech2 = 1.0 - th * th;
    let kappa = (sech2 - t) / (u * u);
    let vg = vecmath::dot(v, g);
    let mut out = vecmath::scale(g, t);
    vecmath::axpy(&mut out, kappa * vg, v);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fewshot::rng::{seed_rng, Stream};
    use crate::geometry::CurvatureSpace;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn params(seed: u64) -> EncoderParams {
        let mut rng = seed_rng(seed, Stream::Init);
        EncoderParams::init(6, 8, 4, &mut rng)
    }

    fn poincare_proj() -> ProjectionConfig {
        ProjectionConfig::plain(CurvatureSpace::poincare_ball(-0.05, 0.001).unwrap()).unwrap()
    }

    #[test]
    fn zero_weights_map_to_origin_or_error() {
        let mut p = params(0);
        p.theta.iter_mut().for_each(|v| *v = 0.0);
        let inputs = vec![vec![1.0; 6], vec![-2.0; 6]];

        let e = ProjectionConfig::plain(CurvatureSpace::euclidean_squared()).unwrap();
        for z in encode(&p, &inputs, &e).unwrap() {
            assert!(z.iter().all(|v| *v == 0.0));
        }
        for z in encode(&p, &inputs, &poincare_proj()).unwrap() {
            assert!(z.iter().all(|v| *v == 0.0));
        }
        let s = ProjectionConfig::plain(CurvatureSpace::sphere_with_radius(10.0).unwrap()).unwrap();
        assert!(matches!(encode(&p, &inputs, &s), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn poincare_embeddings_respect_the_cap() {
        let p = params(1);
        let mut rng = seed_rng(99, Stream::TrainEpisodes);
        let inputs: Vec<Vec<f64>> =
            (0..50).map(|_| (0..6).map(|_| rng.gen_range(-20.0..20.0)).collect()).collect();
        let proj = poincare_proj();
        let cap = proj.poincare_cap().unwrap();
        for z in encode(&p, &inputs, &proj).unwrap() {
            assert!(vecmath::norm(&z) <= cap + 1e-12);
        }

        // with clipping the cap shrinks to the clipped radius
        let clipped = ProjectionConfig::new(
            CurvatureSpace::poincare_ball(-0.05, 0.001).unwrap(),
            crate::protoloss::ClipConfig::clip(2.0).unwrap(),
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(clipped.poincare_cap().unwrap(), 1.8765345764798784, max_relative = 1e-12);
        for z in encode(&p, &inputs, &clipped).unwrap() {
            assert!(vecmath::norm(&z) <= clipped.poincare_cap().unwrap() + 1e-12);
        }
    }

    #[test]
    fn sphere_embeddings_have_fixed_norm() {
        let p = params(2);
        let mut rng = seed_rng(98, Stream::TrainEpisodes);
        let inputs: Vec<Vec<f64>> =
            (0..50).map(|_| (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let proj = ProjectionConfig::plain(CurvatureSpace::sphere_with_radius(12.909944487358056).unwrap())
            .unwrap();
        for z in encode(&p, &inputs, &proj).unwrap() {
            assert!((vecmath::norm(&z) - 12.909944487358056).abs() < 1e-9);
        }
    }

    #[test]
    fn clip_only_valid_for_poincare() {
        assert!(ProjectionConfig::new(
            CurvatureSpace::euclidean_squared(),
            crate::protoloss::ClipConfig::clip(2.0).unwrap(),
            1e-12,
        )
        .is_err());
    }

    /// Finite-difference check of the full chain d loss / d theta, where the
    /// loss is a fixed linear functional of the embeddings.
    fn weight_gradient_check(proj: &ProjectionConfig, seed: u64) {
        let p = params(seed);
        let mut rng = seed_rng(seed + 1000, Stream::TrainEpisodes);
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let loss_of = |p: &EncoderParams| -> f64 {
            let (features, _) = p.forward(&x).unwrap();
            let (z, _) = project_features(&features, proj).unwrap();
            vecmath::dot(&z, &probe)
        };

        // analytic gradient
        let (features, hidden) = p.forward(&x).unwrap();
        let (_, cache) = project_features(&features, proj).unwrap();
        let g_f = project_backward(&features, &cache, &probe, proj);
        let mut grads = GradBuffer::zeros_like(&p);
        grads.accumulate(&x, &hidden, &g_f, p.w2());

        let h = 1e-6;
        let mut checked = 0;
        for i in (0..p.theta.len()).step_by(7) {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.theta[i] += h;
            pm.theta[i] -= h;
            let fd = (loss_of(&pp) - loss_of(&pm)) / (2.0 * h);
            let denom = fd.abs().max(grads.theta[i].abs()).max(1e-6);
            assert!(
                (fd - grads.theta[i]).abs() / denom < 1e-4,
                "theta[{i}]: analytic {} vs fd {}",
                grads.theta[i],
                fd
            );
            checked += 1;
        }
        assert!(checked > 10);
    }

    #[test]
    fn weight_gradients_euclidean() {
        weight_gradient_check(
            &ProjectionConfig::plain(CurvatureSpace::euclidean_squared()).unwrap(),
            5,
        );
    }

    #[test]
    fn weight_gradients_poincare() {
        weight_gradient_check(&poincare_proj(), 6);
    }

    #[test]
    fn weight_gradients_poincare_clipped() {
        // clip small enough that the clip branch is active for this input
        let proj = ProjectionConfig::new(
            CurvatureSpace::poincare_ball(-0.05, 0.001).unwrap(),
            crate::protoloss::ClipConfig::clip(0.05).unwrap(),
            1e-12,
        )
        .unwrap();
        weight_gradient_check(&proj, 7);
    }

    #[test]
    fn weight_gradients_sphere() {
        weight_gradient_check(
            &ProjectionConfig::plain(CurvatureSpace::sphere_with_radius(5.0).unwrap()).unwrap(),
            8,
        );
    }

    #[test]
    fn adam_moves_against_the_gradient() {
        let mut p = params(3);
        let before = p.theta.clone();
        let mut grads = GradBuffer::zeros_like(&p);
        grads.theta.iter_mut().for_each(|g| *g = 1.0);
        p.adam_update(&grads, 1e-2);
        for (b, a) in before.iter().zip(&p.theta) {
            assert!(a < b);
        }
        assert_eq!(p.adam_step, 1);
    }
}
