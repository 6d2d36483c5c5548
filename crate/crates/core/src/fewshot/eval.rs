//! Evaluation on held-out classes and experiment reporting.
//!
//! Each evaluation episode draws fresh support/query sets from the test
//! split, classifies queries by nearest prototype under the space distance
//! (ties broken by lowest class index), and tracks the Euclidean norms of the
//! query embeddings. Episodes use counter-derived RNG streams and aggregate
//! with fixed-order reduction, so the parallel lane is bit-identical to the
//! sequential one.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fewshot::data::{sample_episode, ClassSplit, SyntheticDataset};
use crate::fewshot::encoder::{encode, EncoderParams, ProjectionConfig};
use crate::fewshot::rng::{seed_rng, Stream};
use crate::fewshot::train::TrainConfig;
use crate::geometry::{clipped_radius, effective_radius, CurvatureSpace};
use crate::protoloss::{
    einstein_midpoint, euclidean_centroid, space_distance, sphere_prototype, PrototypeSet,
};
use crate::vecmath;

/// What evaluation needs beyond trained parameters.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub way: usize,
    pub shot: usize,
    pub queries_per_class: usize,
    pub n_episodes: usize,
    pub seed: u64,
    pub renormalize_sphere_prototypes: bool,
}

/// Aggregate statistics over evaluation episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    /// Mean per-episode accuracy.
    pub accuracy: f64,
    /// `1.96 · std / sqrt(n)` over per-episode accuracies.
    pub ci95: f64,
    pub r_min: f64,
    pub r_avg: f64,
    pub r_max: f64,
    pub episodes: usize,
}

/// Per-configuration experiment output, one table row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Space kind: `euclidean`, `poincare`, or `sphere`.
    pub space: String,
    pub d: usize,
    /// Curvature (Poincaré), radius (sphere), or 0 (Euclidean).
    pub param: f64,
    pub accuracy: f64,
    pub ci95: f64,
    pub r_min: f64,
    pub r_avg: f64,
    pub r_max: f64,
    /// Episodes trained.
    pub episodes: usize,
    /// Wall-clock seconds for train + evaluate.
    pub seconds: f64,
}

impl RunReport {
    pub fn from_summary(config: &TrainConfig, summary: &EvalSummary, seconds: f64) -> Self {
        let space = &config.proj.space;
        let param = match *space {
            CurvatureSpace::EuclideanSquared => 0.0,
            CurvatureSpace::PoincareBall { k, .. } => k,
            CurvatureSpace::FixedRadiusSphere { k } => 1.0 / k.sqrt(),
        };
        RunReport {
            space: space.kind_name().to_string(),
            d: config.output_dim,
            param,
            accuracy: summary.accuracy,
            ci95: summary.ci95,
            r_min: summary.r_min,
            r_avg: summary.r_avg,
            r_max: summary.r_max,
            episodes: config.episodes,
            seconds,
        }
    }
}

struct EpisodeStats {
    accuracy: f64,
    norm_min: f64,
    norm_max: f64,
    norm_sum: f64,
    norm_count: usize,
}

/// Evaluate on fresh test episodes. Dispatches to the rayon lane when the
/// `parallel` feature is on.
pub fn evaluate(
    params: &EncoderParams,
    dataset: &SyntheticDataset,
    proj: &ProjectionConfig,
    opts: &EvalOptions,
) -> Result<EvalSummary> {
    #[cfg(feature = "parallel")]
    {
        evaluate_par(params, dataset, proj, opts)
    }
    #[cfg(not(feature = "parallel"))]
    {
        evaluate_seq(params, dataset, proj, opts)
    }
}

/// Sequential evaluation; always available.
pub fn evaluate_seq(
    params: &EncoderParams,
    dataset: &SyntheticDataset,
    proj: &ProjectionConfig,
    opts: &EvalOptions,
) -> Result<EvalSummary> {
    check_opts(opts)?;
    let stats = (0..opts.n_episodes)
        .map(|i| run_episode(params, dataset, proj, opts, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce(&stats))
}

/// Parallel evaluation over episodes; bit-identical to [`evaluate_seq`]
/// because episode RNG streams are counter-derived and the reduction is
/// ordered.
#[cfg(feature = "parallel")]
pub fn evaluate_par(
    params: &EncoderParams,
    dataset: &SyntheticDataset,
    proj: &ProjectionConfig,
    opts: &EvalOptions,
) -> Result<EvalSummary> {
    use rayon::prelude::*;
    check_opts(opts)?;
    let stats = (0..opts.n_episodes)
        .into_par_iter()
        .map(|i| run_episode(params, dataset, proj, opts, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce(&stats))
}

fn check_opts(opts: &EvalOptions) -> Result<()> {
    if opts.n_episodes < 1 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    Ok(())
}

fn run_episode(
    params: &EncoderParams,
    dataset: &SyntheticDataset,
    proj: &ProjectionConfig,
    opts: &EvalOptions,
    index: u64,
) -> Result<EpisodeStats> {
    let mut rng: ChaCha8Rng = seed_rng(opts.seed, Stream::EvalEpisode(index));
    let episode = sample_episode(
        dataset,
        ClassSplit::Test,
        opts.way,
        opts.shot,
        opts.queries_per_class,
        &mut rng,
    )?;

    let support_inputs: Vec<Vec<f64>> = episode.support.iter().map(|(x, _)| x.clone()).collect();
    let support = encode(params, &support_inputs, proj)?;
    let mut by_class: Vec<Vec<Vec<f64>>> = vec![Vec::new(); episode.way];
    for (z, (_, label)) in support.into_iter().zip(&episode.support) {
        by_class[*label].push(z);
    }
    let mut centroids = Vec::with_capacity(episode.way);
    for class_points in &by_class {
        let c = match proj.space {
            CurvatureSpace::EuclideanSquared => euclidean_centroid(class_points)?,
            CurvatureSpace::PoincareBall { k, .. } => einstein_midpoint(class_points, k)?,
            CurvatureSpace::FixedRadiusSphere { k } => {
                sphere_prototype(class_points, 1.0 / k.sqrt(), opts.renormalize_sphere_prototypes)?
            }
        };
        centroids.push(c);
    }
    let prototypes = PrototypeSet::new(proj.space, centroids)?;

    let query_inputs: Vec<Vec<f64>> = episode.query.iter().map(|(x, _)| x.clone()).collect();
    let queries = encode(params, &query_inputs, proj)?;

    let mut correct = 0usize;
    let mut norm_min = f64::INFINITY;
    let mut norm_max = f64::NEG_INFINITY;
    let mut norm_sum = 0.0;
    for (z, (_, label)) in queries.iter().zip(&episode.query) {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, w) in prototypes.centroids().iter().enumerate() {
            let d = space_distance(&proj.space, w, z)?;
            // strict comparison keeps the lowest class index on ties
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if best == *label {
            correct += 1;
        }
        let n = vecmath::norm(z);
        norm_min = norm_min.min(n);
        norm_max = norm_max.max(n);
        norm_sum += n;
    }
    Ok(EpisodeStats {
        accuracy: correct as f64 / episode.query.len() as f64,
        norm_min,
        norm_max,
        norm_sum,
        norm_count: episode.query.len(),
    })
}

fn reduce(stats: &[EpisodeStats]) -> EvalSummary {
    let n = stats.len();
    let mean = stats.iter().map(|s| s.accuracy).sum::<f64>() / n as f64;
    let ci95 = if n > 1 {
        let var =
            stats.iter().map(|s| (s.accuracy - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        1.96 * var.sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    let mut r_min = f64::INFINITY;
    let mut r_max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in stats {
        r_min = r_min.min(s.norm_min);
        r_max = r_max.max(s.norm_max);
        sum += s.norm_sum;
        count += s.norm_count;
    }
    EvalSummary { accuracy: mean, ci95, r_min, r_avg: sum / count as f64, r_max, episodes: n }
}

/// Fraction of the applicable radius cap reached by the average embedding
/// norm: `r_avg / clipped_radius` under feature clipping, `r_avg /
/// effective_radius` otherwise. Only defined for the Poincaré ball; 1 means
/// full boundary saturation.
pub fn saturation_metric(report: &RunReport, proj: &ProjectionConfig) -> Result<f64> {
    let CurvatureSpace::PoincareBall { k, epsilon } = proj.space else {
        return Err(Error::InvalidArgument(
            "saturation is only defined for the Poincaré ball".into(),
        ));
    };
    let cap = match proj.clip.max_norm() {
        Some(c) => clipped_radius(c, k)?,
        None => effective_radius(epsilon, k)?,
    };
    Ok(report.r_avg / cap)
}

/// Train, then evaluate, timing the whole pipeline.
pub fn run_experiment(config: &TrainConfig, opts: &EvalOptions) -> Result<(RunReport, EncoderParams, Vec<f64>)> {
    let started = std::time::Instant::now();
    let (params, curve) = crate::fewshot::train::train(config)?;
    let dataset = SyntheticDataset::generate(config.hierarchy);
    let summary = evaluate(&params, &dataset, &config.proj, opts)?;
    let seconds = started.elapsed().as_secs_f64();
    Ok((RunReport::from_summary(config, &summary, seconds), params, curve))
}
