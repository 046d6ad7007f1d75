use std::io;

use thiserror::Error;

/// Errors raised by the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("mesh topology: {0}")]
    Topology(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("integration blew up at node {node} (dt = {dt} ms)")]
    Integration { node: usize, dt: f64 },
    #[error("electrode placement: {0}")]
    Placement(String),
    #[error("feature extraction: {0}")]
    Feature(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn in_scenario(self, scenario: &str) -> Self {
        Error::Scenario { scenario: scenario.to_owned(), source: Box::new(self) }
    }
}
