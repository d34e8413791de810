//! Batch dataset tooling around `i2e-core`: corpus ingestion, resizing and
//! augmentation, sharded conversion with manifests, validation, and
//! benchmarking.

pub mod bench;
pub mod corpus;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod preprocess;

pub use error::{PipelineError, Result};
pub use pipeline::{run_pipeline, validate_dataset, OutputLayout, PipelineConfig, RunManifest};
