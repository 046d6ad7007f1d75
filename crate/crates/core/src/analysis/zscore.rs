use crate::error::{Error, Result};

pub const MIN_REPLICATES: usize = 8;
/// Healthy standard deviations below this give no z-score.
pub const MIN_STD: f64 = 1e-12;

/// Healthy reference statistics for one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub mean: f64,
    /// Sample standard deviation (n − 1).
    pub std: f64,
}

impl Reference {
    pub fn from_replicates(values: &[f64]) -> Result<Self> {
        if values.len() < MIN_REPLICATES {
            return Err(Error::Validation(format!(
                "{} healthy replicates, at least {MIN_REPLICATES} needed",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Reference { mean, std: var.sqrt() })
    }

    /// `None` when the healthy feature has no spread.
    pub fn z(&self, x: f64) -> Option<f64> {
        (self.std >= MIN_STD).then(|| (x - self.mean) / self.std)
    }
}

/// z-scores of each scenario's features against the healthy replicates;
/// `scenarios[s][f]` and `replicates[r][f]` index feature `f`.
pub fn zscores(scenarios: &[Vec<f64>], replicates: &[Vec<f64>]) -> Result<Vec<Vec<Option<f64>>>> {
    let nf = replicates.first().map_or(0, Vec::len);
    if replicates.iter().chain(scenarios).any(|v| v.len() != nf) {
        return Err(Error::Validation("feature vectors differ in length".into()));
    }
    let refs = (0..nf)
        .map(|f| Reference::from_replicates(&replicates.iter().map(|r| r[f]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    if replicates.len() < MIN_REPLICATES {
        return Err(Error::Validation(format!("at least {MIN_REPLICATES} healthy replicates needed")));
    }
    Ok(scenarios.iter().map(|s| s.iter().zip(&refs).map(|(&x, r)| r.z(x)).collect()).collect())
}
