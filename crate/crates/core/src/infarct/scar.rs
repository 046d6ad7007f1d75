use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::aha::aha_segment;
use crate::geometry::coords::VentricularCoords;

use super::{Tissue, TissueMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScarParams {
    pub tau_base: f64,
    /// Transmural penalty: the threshold rises by `lambda` from endo to epi.
    pub lambda: f64,
    /// Noise correlation length (cm).
    pub sigma: f64,
    pub bz_radius: f64,
    /// AHA segments the scar may occupy.
    pub region: BTreeSet<u8>,
    pub seed: u64,
}

impl ScarParams {
    pub fn check(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Parameter("sigma must be positive".into()));
        }
        if !(self.bz_radius >= 0.0) {
            return Err(Error::Parameter("bz_radius must be non-negative".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Parameter("lambda must be non-negative".into()));
        }
        if self.region.is_empty() || self.region.iter().any(|s| !(1..=17).contains(s)) {
            return Err(Error::Parameter("region must be a nonempty set of AHA segments".into()));
        }
        Ok(())
    }

    /// Threshold a node must exceed to become scar.
    pub fn threshold(&self, tm: f64) -> f64 {
        self.tau_base + self.lambda * (1.0 - tm)
    }
}

/// Scar where the noise exceeds a threshold that rises towards the
/// epicardium, restricted to the region's AHA segments. An empty result is
/// logged; callers decide whether to flag the scenario.
pub fn synthesize_scar(noise: &[f64], coords: &VentricularCoords, params: &ScarParams) -> Result<TissueMap> {
    params.check()?;
    if noise.len() != coords.len() {
        return Err(Error::Parameter("noise and coordinates cover different node sets".into()));
    }
    let labels: Vec<Tissue> = (0..coords.len())
        .map(|i| {
            let c = coords.at(i);
            let in_region = aha_segment(&c).map(|s| params.region.contains(&s)).unwrap_or(false);
            if in_region && noise[i] > params.threshold(c.tm) {
                Tissue::Scar
            } else {
                Tissue::Normal
            }
        })
        .collect();
    let map = TissueMap { labels };
    if map.count(Tissue::Scar) == 0 {
        warn!("thresholding produced an empty scar (tau_base {}, lambda {})", params.tau_base, params.lambda);
    }
    Ok(map)
}
