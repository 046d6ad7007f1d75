pub mod activation;
pub mod analysis;
pub mod cohort;
pub mod config;
pub mod ecg;
pub mod error;
pub mod geometry;
pub mod infarct;
pub mod io;
pub mod reaction;

pub use error::{Error, Result};
