//! End-to-end scenario runs and ML-ready cohort export.

pub mod manifest;
pub mod pipeline;
pub mod sample;
pub mod sampling;

pub use manifest::{generate_cohort, list_meshes, Cohort, CohortSummary, ManifestRow};
pub use pipeline::{derive_seed, Heart, ScenarioRun};
pub use sample::{CohortSample, SampleMeta};
pub use sampling::subsample_nodes;
