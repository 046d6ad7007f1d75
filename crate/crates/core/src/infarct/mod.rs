//! Stochastic scar and border-zone synthesis.

pub mod border;
pub mod catalog;
pub mod noise;
pub mod scar;

use serde::{Deserialize, Serialize};

pub use border::grow_border_zone;
pub use catalog::{scenario_catalog, Location, Scenario, Transmurality};
pub use noise::correlated_noise_field;
pub use scar::{synthesize_scar, ScarParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Tissue {
    Normal = 0,
    Scar = 1,
    BorderZone = 2,
}

impl Tissue {
    /// Relative slowness rank; larger is slower.
    pub fn slowness_rank(self) -> u8 {
        match self {
            Tissue::Normal => 0,
            Tissue::BorderZone => 1,
            Tissue::Scar => 2,
        }
    }
}

/// Per-node tissue class.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TissueMap {
    pub labels: Vec<Tissue>,
}

impl TissueMap {
    pub fn healthy(n: usize) -> Self {
        TissueMap { labels: vec![Tissue::Normal; n] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, t: Tissue) -> usize {
        self.labels.iter().filter(|&&l| l == t).count()
    }

    pub fn nodes(&self, t: Tissue) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(move |(_, &l)| l == t).map(|(i, _)| i)
    }
}

/// Scar plus border zone from a precomputed noise field; the flag is set
/// when thresholding left no scar.
pub fn scenario_tissue(
    mesh: &crate::geometry::mesh::Mesh,
    coords: &crate::geometry::coords::VentricularCoords,
    noise: &[f64],
    params: &ScarParams,
) -> crate::error::Result<(TissueMap, bool)> {
    let scar = synthesize_scar(noise, coords, params)?;
    let degenerate = scar.count(Tissue::Scar) == 0;
    Ok((grow_border_zone(mesh, &scar, params.bz_radius), degenerate))
}
