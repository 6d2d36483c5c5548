//! Synthetic few-shot experiment harness: data generation, episodic
//! sampling, encoder training, and evaluation reports.

pub mod data;
pub mod encoder;
pub mod eval;
pub mod train;

pub(crate) mod rng;

pub use data::{generate_hierarchy, sample_episode, ClassSplit, Episode, HierarchySpec, SyntheticDataset};
pub use encoder::{encode, EncoderParams, ProjectionConfig};
pub use eval::{
    evaluate, evaluate_seq, run_experiment, saturation_metric, EvalOptions, EvalSummary, RunReport,
};
#[cfg(feature = "parallel")]
pub use eval::evaluate_par;
pub use train::{train, TrainConfig};
