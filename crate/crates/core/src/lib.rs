//! Instance segmentation of single-class point clouds by center-point
//! selection and feature-space clustering.
//!
//! The pipeline: ground-truth center scores for every point, greedy point
//! NMS on predicted scores to pick one reference point per instance, and
//! assignment of every other point to its nearest reference point in
//! embedding space, gated by Euclidean distance. The learned feature
//! extractor is replaced by an oracle embedding provider or embeddings
//! loaded from disk.

pub mod cli;
pub mod clustering;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod io;
mod kernel;
pub mod scene;
pub mod scenegen;
pub mod scoring;

pub use clustering::{assign_points, segment, select_centers, NmsParams, SegmentationResult, SegmentationStatus};
pub use embedding::{oracle_embed, EmbeddedScene, OracleParams};
pub use error::{Error, ParseError, Result};
pub use scene::{Scene, ScenePoint};
pub use scoring::{CenterScoreParams, LossParams};
