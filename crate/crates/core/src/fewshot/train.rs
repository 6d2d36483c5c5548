//! Episodic training loop.
//!
//! Each episode: sample support and query sets, embed the supports, build
//! per-class prototypes (Euclidean centroid, Einstein midpoint, or
//! renormalized centroid depending on the space), embed the queries, take the
//! prototypical loss, and push its analytic gradient back through the
//! projection and the perceptron into an Adam step. Prototypes are recomputed
//! from supports every episode and are not differentiated through; gradients
//! reach the encoder only via the query embeddings.
//!
//! Training is strictly sequential (optimizer state dependency) and a pure
//! function of the config, seed included.

use crate::error::{Error, Result};
use crate::fewshot::data::{sample_episode, ClassSplit, Episode, HierarchySpec, SyntheticDataset};
use crate::fewshot::encoder::{
    project_backward, project_features, EncoderParams, GradBuffer, ProjectionConfig,
};
use crate::fewshot::rng::{seed_rng, Stream};
use crate::geometry::CurvatureSpace;
use crate::protoloss::{
    einstein_midpoint, euclidean_centroid, loss_gradient, prototypical_loss, sphere_prototype,
    GradientMode, PrototypeSet,
};
use crate::vecmath;

/// Everything a training run depends on.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub proj: ProjectionConfig,
    pub grad_mode: GradientMode,
    pub way: usize,
    pub shot: usize,
    pub queries_per_class: usize,
    pub episodes: usize,
    pub lr: f64,
    /// Learning rate decays by `scheduler_gamma` every `scheduler_step` episodes.
    pub scheduler_step: usize,
    pub scheduler_gamma: f64,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub hierarchy: HierarchySpec,
    pub seed: u64,
    /// Push sphere prototypes back onto the sphere after averaging.
    pub renormalize_sphere_prototypes: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grad_mode == GradientMode::RiemannianScaled
            && !matches!(self.proj.space, CurvatureSpace::PoincareBall { .. })
        {
            return Err(Error::Config(
                "riemannian gradient mode requires the Poincaré ball".into(),
            ));
        }
        if self.way < 2 {
            return Err(Error::Config("way must be at least 2".into()));
        }
        if self.shot < 1 || self.queries_per_class < 1 {
            return Err(Error::Config("shot and queries_per_class must be at least 1".into()));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.scheduler_step < 1 {
            return Err(Error::Config("scheduler_step must be at least 1".into()));
        }
        if !(self.scheduler_gamma > 0.0 && self.scheduler_gamma <= 1.0) {
            return Err(Error::Config(format!(
                "scheduler_gamma must lie in (0, 1], got {}",
                self.scheduler_gamma
            )));
        }
        if self.hidden_dim < 1 || self.output_dim < 1 {
            return Err(Error::Config("hidden_dim and output_dim must be at least 1".into()));
        }
        Ok(())
    }

    fn lr_at(&self, episode: usize) -> f64 {
        self.lr * self.scheduler_gamma.powi((episode / self.scheduler_step) as i32)
    }
}

/// Train an encoder; returns the final parameters and the per-episode loss
/// curve. Deterministic given the config.
pub fn train(config: &TrainConfig) -> Result<(EncoderParams, Vec<f64>)> {
    config.validate()?;
    let dataset = SyntheticDataset::generate(config.hierarchy);
    let train_classes = dataset.split_classes(ClassSplit::Train).len();
    if train_classes < config.way {
        return Err(Error::Config(format!(
            "train split holds {train_classes} classes but episodes need {}",
            config.way
        )));
    }
    let mut init_rng = seed_rng(config.seed, Stream::Init);
    let mut params = EncoderParams::init(
        config.hierarchy.input_dim,
        config.hidden_dim,
        config.output_dim,
        &mut init_rng,
    );
    let mut episode_rng = seed_rng(config.seed, Stream::TrainEpisodes);
    let mut curve = Vec::with_capacity(config.episodes);

    for episode_idx in 0..config.episodes {
        let episode = sample_episode(
            &dataset,
            ClassSplit::Train,
            config.way,
            config.shot,
            config.queries_per_class,
            &mut episode_rng,
        )?;
        let lr = config.lr_at(episode_idx);
        let loss = train_episode(&mut params, &episode, config, lr).map_err(|e| match e {
            Error::NumericDomain(detail) => Error::TrainingDiverged { episode: episode_idx, detail },
            other => other,
        })?;
        if !loss.is_finite() || !params.all_finite() {
            return Err(Error::TrainingDiverged {
                episode: episode_idx,
                detail: format!("loss {loss} or parameters became non-finite"),
            });
        }
        curve.push(loss);
    }
    Ok((params, curve))
}

fn train_episode(
    params: &mut EncoderParams,
    episode: &Episode,
    config: &TrainConfig,
    lr: f64,
) -> Result<f64> {
    let prototypes = build_prototypes(params, episode, config)?;

    // forward queries, keeping activations for backprop
    let mut caches = Vec::with_capacity(episode.query.len());
    let mut queries = Vec::with_capacity(episode.query.len());
    for (x, label) in &episode.query {
        let (features, hidden) = params.forward(x)?;
        let (z, proj_cache) = project_features(&features, &config.proj)?;
        caches.push((features, hidden, proj_cache));
        queries.push((z, *label));
    }

    let loss = prototypical_loss(&prototypes, &queries)?;
    let grads_z = gradient_with_collision_retry(&prototypes, &mut queries, config.grad_mode)?;

    let mut grads = GradBuffer::zeros_like(params);
    for (((features, hidden, proj_cache), g_z), (x, _)) in
        caches.iter().zip(&grads_z).zip(&episode.query)
    {
        let g_f = project_backward(features, proj_cache, g_z, &config.proj);
        grads.accumulate(x, hidden, &g_f, params.w2());
    }
    params.adam_update(&grads, lr);
    Ok(loss)
}

fn build_prototypes(
    params: &EncoderParams,
    episode: &Episode,
    config: &TrainConfig,
) -> Result<PrototypeSet> {
    let support = crate::fewshot::encoder::encode(
        params,
        &episode.support.iter().map(|(x, _)| x.clone()).collect::<Vec<_>>(),
        &config.proj,
    )?;
    let mut by_class: Vec<Vec<Vec<f64>>> = vec![Vec::new(); episode.way];
    for (z, (_, label)) in support.into_iter().zip(&episode.support) {
        by_class[*label].push(z);
    }
    let mut centroids = Vec::with_capacity(episode.way);
    for class_points in &by_class {
        let c = match config.proj.space {
            CurvatureSpace::EuclideanSquared => euclidean_centroid(class_points)?,
            CurvatureSpace::PoincareBall { k, .. } => einstein_midpoint(class_points, k)?,
            CurvatureSpace::FixedRadiusSphere { k } => sphere_prototype(
                class_points,
                1.0 / k.sqrt(),
                config.renormalize_sphere_prototypes,
            )?,
        };
        centroids.push(c);
    }
    PrototypeSet::new(config.proj.space, centroids)
}

/// Exact query/prototype collisions are a measure-zero event surfaced as a
/// hard error by the library; the trainer nudges the offending query by 1e-9
/// and retries.
fn gradient_with_collision_retry(
    prototypes: &PrototypeSet,
    queries: &mut Vec<(Vec<f64>, usize)>,
    mode: GradientMode,
) -> Result<Vec<Vec<f64>>> {
    for _ in 0..4 {
        match loss_gradient(prototypes, queries, mode) {
            Ok(g) => return Ok(g),
            Err(Error::SingularGradient { query }) => {
                nudge(&mut queries[query].0, prototypes.space());
            }
            Err(e) => return Err(e),
        }
    }
    loss_gradient(prototypes, queries, mode)
}

fn nudge(z: &mut [f64], space: &CurvatureSpace) {
    z[0] += 1e-9;
    if let CurvatureSpace::FixedRadiusSphere { k } = *space {
        let r = 1.0 / k.sqrt();
        let n = vecmath::norm(z);
        if n > 0.0 {
            for c in z.iter_mut() {
                *c *= r / n;
            }
        }
    }
}
