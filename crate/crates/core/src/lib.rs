//! Constant-curvature geometry and prototypical few-shot learning on synthetic data.
//!
//! The crate is organized around three metric spaces used as embedding targets:
//! the squared-Euclidean space, the Poincaré ball of curvature `k < 0`, and a
//! fixed-radius sphere carrying the chordal (`ℓ2`) metric. It provides
//!
//! * [`geometry`] — both models of hyperbolic space (hyperboloid and Poincaré
//!   ball), the maps between them, and every distance/radius formula used by
//!   the rest of the crate;
//! * [`concentration`] — hyperbolic ball volume, boundary sphere area, and the
//!   volume/area concentration ratio with its `r/d` bound;
//! * [`protoloss`] — prototypical classification probabilities, the episodic
//!   loss, centroids (Euclidean and Einstein midpoint), encoder output maps,
//!   and analytic gradients for all of them;
//! * [`fewshot`] — a synthetic hierarchical dataset, episodic sampling, a small
//!   trainable encoder with Adam, and accuracy/radius reporting.
//!
//! All floating point work is `f64`. Values are immutable after construction
//! and safe to share across threads. With the `parallel` feature (on by
//! default) evaluation episodes and concentration sweeps run on rayon;
//! sequential fallbacks are always compiled and produce bit-identical results.

pub mod concentration;
pub mod error;
pub mod fewshot;
pub mod geometry;
pub mod protoloss;

pub(crate) mod numeric;
pub(crate) mod vecmath;

pub use error::{Error, Result};
