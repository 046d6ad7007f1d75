//! Scenario dissimilarity (DTW) and ECG phenotype z-scores.

pub mod dtw;
pub mod features;
pub mod report;
pub mod zscore;

pub use dtw::{dtw, dtw_matrix, DtwMatrix};
pub use features::{extract_features, PhenotypeFeatures, SCALAR_NAMES};
pub use report::{analyze, analyze_cohort, analyze_records, AnalysisReport};
pub use zscore::{zscores, MIN_REPLICATES};
