//! Synthetic hierarchical dataset and episodic sampling.
//!
//! Classes are the leaves of a rooted `branching^depth` tree. Every non-root
//! node draws an isotropic Gaussian offset; a leaf's class mean is the sum of
//! offsets along its root path, so siblings share ancestor terms and the
//! class means inherit the tree's covariance structure. Samples are class
//! mean plus isotropic noise.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fewshot::rng::{seed_rng, Stream};

/// Parameters of the synthetic class hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchySpec {
    pub branching: usize,
    pub depth: usize,
    pub input_dim: usize,
    /// Standard deviation of each node's Gaussian offset.
    pub node_scale: f64,
    /// Standard deviation of per-sample noise.
    pub noise_scale: f64,
    pub seed: u64,
}

impl HierarchySpec {
    pub fn new(
        branching: usize,
        depth: usize,
        input_dim: usize,
        node_scale: f64,
        noise_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if branching < 2 {
            return Err(Error::Config("branching must be at least 2".into()));
        }
        if depth < 1 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        if input_dim < 1 {
            return Err(Error::Config("input_dim must be at least 1".into()));
        }
        for (name, v) in [("node_scale", node_scale), ("noise_scale", noise_scale)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(HierarchySpec { branching, depth, input_dim, node_scale, noise_scale, seed })
    }

    pub fn num_classes(&self) -> usize {
        self.branching.pow(self.depth as u32)
    }
}

/// Class means for every leaf, in leaf-index order. Deterministic in the seed.
pub fn generate_hierarchy(spec: &HierarchySpec) -> Vec<Vec<f64>> {
    let mut rng = seed_rng(spec.seed, Stream::Hierarchy);
    // running root-path sums, one per node of the current level
    let mut sums = vec![vec![0.0; spec.input_dim]];
    for _ in 0..spec.depth {
        let mut next = Vec::with_capacity(sums.len() * spec.branching);
        for parent in &sums {
            for _ in 0..spec.branching {
                let mut child = parent.clone();
                for c in child.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *c += spec.node_scale * g;
                }
                next.push(child);
            }
        }
        sums = next;
    }
    sums
}

/// Block split of leaf classes: 60% train, 20% validation, rest test, by
/// leaf index. For the 25-class default this is 15/5/5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassSplit {
    Train,
    Validation,
    Test,
}

/// A generated dataset: class means plus sampling parameters.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    spec: HierarchySpec,
    class_means: Vec<Vec<f64>>,
}

impl SyntheticDataset {
    pub fn generate(spec: HierarchySpec) -> Self {
        let class_means = generate_hierarchy(&spec);
        SyntheticDataset { spec, class_means }
    }

    pub fn spec(&self) -> &HierarchySpec {
        &self.spec
    }

    pub fn class_means(&self) -> &[Vec<f64>] {
        &self.class_means
    }

    pub fn num_classes(&self) -> usize {
        self.class_means.len()
    }

    /// Global class indices belonging to a split.
    pub fn split_classes(&self, split: ClassSplit) -> Vec<usize> {
        let n = self.num_classes();
        let train_end = n * 6 / 10;
        let val_end = train_end + n * 2 / 10;
        match split {
            ClassSplit::Train => (0..train_end).collect(),
            ClassSplit::Validation => (train_end..val_end).collect(),
            ClassSplit::Test => (val_end..n).collect(),
        }
    }

    fn draw_sample(&self, class: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.class_means[class]
            .iter()
            .map(|m| {
                let g: f64 = StandardNormal.sample(rng);
                m + self.spec.noise_scale * g
            })
            .collect()
    }
}

/// One few-shot task: `way` classes, `shot` labelled supports and
/// `queries_per_class` queries per class. Labels are episode-local in
/// `[0, way)`.
#[derive(Debug, Clone)]
pub struct Episode {
    pub way: usize,
    pub shot: usize,
    pub queries_per_class: usize,
    pub support: Vec<(Vec<f64>, usize)>,
    pub query: Vec<(Vec<f64>, usize)>,
}

/// Sample an episode from the classes of `split`. Classes are drawn uniformly
/// without replacement; supports and queries are disjoint fresh draws.
pub fn sample_episode(
    dataset: &SyntheticDataset,
    split: ClassSplit,
    way: usize,
    shot: usize,
    queries_per_class: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Episode> {
    if way < 2 {
        return Err(Error::Config("way must be at least 2".into()));
    }
    if shot < 1 || queries_per_class < 1 {
        return Err(Error::Config("shot and queries_per_class must be at least 1".into()));
    }
    let pool = dataset.split_classes(split);
    if pool.len() < way {
        return Err(Error::Config(format!(
            "split holds {} classes but the episode needs {way}",
            pool.len()
        )));
    }
    // partial Fisher-Yates for `way` distinct classes
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    for i in 0..way {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    let classes: Vec<usize> = indices[..way].iter().map(|&i| pool[i]).collect();

    let mut support = Vec::with_capacity(way * shot);
    let mut query = Vec::with_capacity(way * queries_per_class);
    for (label, &class) in classes.iter().enumerate() {
        for _ in 0..shot {
            support.push((dataset.draw_sample(class, rng), label));
        }
        for _ in 0..queries_per_class {
            query.push((dataset.draw_sample(class, rng), label));
        }
    }
    Ok(Episode { way, shot, queries_per_class, support, query })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fewshot::rng::{seed_rng, Stream};

    fn spec(seed: u64) -> HierarchySpec {
        HierarchySpec::new(5, 2, 16, 1.0, 0.5, seed).unwrap()
    }

    #[test]
    fn depth_one_gives_independent_means() {
        let s = HierarchySpec::new(2, 1, 8, 1.0, 0.5, 42).unwrap();
        let means = generate_hierarchy(&s);
        assert_eq!(means.len(), 2);
        assert_eq!(means[0].len(), 8);
        assert_ne!(means[0], means[1]);
    }

    #[test]
    fn hierarchy_deterministic_in_seed() {
        let a = generate_hierarchy(&spec(9));
        let b = generate_hierarchy(&spec(9));
        assert_eq!(a, b);
        let c = generate_hierarchy(&spec(10));
        assert_ne!(a, c);
    }

    #[test]
    fn sibling_covariance_matches_construction() {
        // depth 2: siblings share the parent offset, giving per-coordinate
        // covariance node_scale^2; non-siblings are independent; each mean has
        // per-coordinate variance 2 * node_scale^2. Monte Carlo over seeds.
        let dims = 16;
        let trials = 10_000usize;
        let (mut sib, mut non_sib, mut var) = (0.0, 0.0, 0.0);
        for seed in 0..trials as u64 {
            let s = HierarchySpec::new(2, 2, dims, 1.0, 0.5, seed).unwrap();
            let m = generate_hierarchy(&s);
            // leaves 0,1 share a parent; leaves 0,2 do not
            for j in 0..dims {
                sib += m[0][j] * m[1][j];
                non_sib += m[0][j] * m[2][j];
                var += m[0][j] * m[0][j];
            }
        }
        let n = (trials * dims) as f64;
        assert!((sib / n - 1.0).abs() < 1e-1, "sibling covariance {}", sib / n);
        assert!((non_sib / n).abs() < 1e-1, "non-sibling covariance {}", non_sib / n);
        assert!((var / n - 2.0).abs() < 1e-1, "mean variance {}", var / n);
    }

    #[test]
    fn split_blocks_by_leaf_index() {
        let d = SyntheticDataset::generate(spec(1));
        assert_eq!(d.num_classes(), 25);
        assert_eq!(d.split_classes(ClassSplit::Train), (0..15).collect::<Vec<_>>());
        assert_eq!(d.split_classes(ClassSplit::Validation), (15..20).collect::<Vec<_>>());
        assert_eq!(d.split_classes(ClassSplit::Test), (20..25).collect::<Vec<_>>());
    }

    #[test]
    fn episode_shapes_and_labels() {
        let d = SyntheticDataset::generate(spec(4));
        let mut rng = seed_rng(0, Stream::TrainEpisodes);
        let ep = sample_episode(&d, ClassSplit::Train, 5, 1, 15, &mut rng).unwrap();
        assert_eq!(ep.support.len(), 5);
        assert_eq!(ep.query.len(), 75);

        let ep = sample_episode(&d, ClassSplit::Train, 5, 5, 15, &mut rng).unwrap();
        assert_eq!(ep.support.len(), 25);

        // each label appears exactly shot and queries_per_class times
        let mut s_counts = [0usize; 5];
        let mut q_counts = [0usize; 5];
        for (_, l) in &ep.support {
            assert!(*l < 5);
            s_counts[*l] += 1;
        }
        for (_, l) in &ep.query {
            assert!(*l < 5);
            q_counts[*l] += 1;
        }
        assert!(s_counts.iter().all(|&c| c == 5));
        assert!(q_counts.iter().all(|&c| c == 15));
    }

    #[test]
    fn episode_needs_enough_classes() {
        let d = SyntheticDataset::generate(spec(4));
        let mut rng = seed_rng(0, Stream::TrainEpisodes);
        // test split has 5 classes; asking for 6 must fail
        assert!(sample_episode(&d, ClassSplit::Test, 6, 1, 1, &mut rng).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(HierarchySpec::new(1, 2, 8, 1.0, 0.5, 0).is_err());
        assert!(HierarchySpec::new(2, 0, 8, 1.0, 0.5, 0).is_err());
        assert!(HierarchySpec::new(2, 2, 8, 0.0, 0.5, 0).is_err());
        assert!(HierarchySpec::new(2, 2, 8, 1.0, -1.0, 0).is_err());
    }
}
