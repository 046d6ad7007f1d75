//! The fixed infarct scenario catalog: eight locations, each subendocardial
//! or transmural, plus a healthy control.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::scar::ScarParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Septal,
    Apical,
    ExtAnterior,
    LimAnterior,
    LateralLarge,
    LateralSmall,
    Inferior,
    Inferolateral,
}

impl Location {
    pub const ALL: [Location; 8] = [
        Location::Septal,
        Location::Apical,
        Location::ExtAnterior,
        Location::LimAnterior,
        Location::LateralLarge,
        Location::LateralSmall,
        Location::Inferior,
        Location::Inferolateral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Location::Septal => "septal",
            Location::Apical => "apical",
            Location::ExtAnterior => "ext_anterior",
            Location::LimAnterior => "lim_anterior",
            Location::LateralLarge => "lateral_large",
            Location::LateralSmall => "lateral_small",
            Location::Inferior => "inferior",
            Location::Inferolateral => "inferolateral",
        }
    }

    pub fn segments(self) -> &'static [u8] {
        match self {
            Location::Septal => &[2, 3, 8, 9, 14],
            Location::Apical => &[13, 14, 15, 16, 17],
            Location::ExtAnterior => &[1, 2, 7, 8, 13, 14],
            Location::LimAnterior => &[1, 7, 13],
            Location::LateralLarge => &[5, 6, 11, 12, 16],
            Location::LateralSmall => &[12, 16],
            Location::Inferior => &[4, 10, 15],
            Location::Inferolateral => &[4, 5, 10, 11, 15, 16],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transmurality {
    Subendocardial,
    Transmural,
}

impl Transmurality {
    pub fn name(self) -> &'static str {
        match self {
            Transmurality::Subendocardial => "subendocardial",
            Transmurality::Transmural => "transmural",
        }
    }
}

/// Catalog-wide scar parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogParams {
    pub lambda_transmural: f64,
    pub lambda_subendocardial: f64,
    pub sigma: f64,
    pub bz_radius: f64,
    /// Base threshold for every location except `lateral_small`.
    pub tau_base: f64,
    /// Higher base threshold that keeps the small lateral scar small.
    pub tau_base_small: f64,
}

impl Default for CatalogParams {
    fn default() -> Self {
        CatalogParams {
            lambda_transmural: 0.05,
            lambda_subendocardial: 0.6,
            sigma: 0.5,
            bz_radius: 0.2,
            tau_base: 0.5,
            tau_base_small: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub location: Option<Location>,
    pub transmurality: Option<Transmurality>,
    /// `None` for the healthy control.
    pub scar: Option<ScarParams>,
}

impl Scenario {
    pub fn is_healthy(&self) -> bool {
        self.scar.is_none()
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut s = self.clone();
        if let Some(p) = &mut s.scar {
            p.seed = seed;
        }
        s
    }

    /// `"transmural"`, `"subendocardial"` or `"none"`.
    pub fn transmurality_name(&self) -> &'static str {
        self.transmurality.map(Transmurality::name).unwrap_or("none")
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub const HEALTHY: &str = "healthy";

pub fn scenario_catalog() -> Vec<Scenario> {
    scenario_catalog_with(&CatalogParams::default())
}

/// Healthy first, then each location subendocardial then transmural.
pub fn scenario_catalog_with(p: &CatalogParams) -> Vec<Scenario> {
    let mut out = vec![Scenario { name: HEALTHY.into(), location: None, transmurality: None, scar: None }];
    for loc in Location::ALL {
        for tr in [Transmurality::Subendocardial, Transmurality::Transmural] {
            let lambda = match tr {
                Transmurality::Subendocardial => p.lambda_subendocardial,
                Transmurality::Transmural => p.lambda_transmural,
            };
            let tau_base = if loc == Location::LateralSmall { p.tau_base_small } else { p.tau_base };
            out.push(Scenario {
                name: format!("{}_{}", tr.name(), loc.name()),
                location: Some(loc),
                transmurality: Some(tr),
                scar: Some(ScarParams {
                    tau_base,
                    lambda,
                    sigma: p.sigma,
                    bz_radius: p.bz_radius,
                    region: loc.segments().iter().copied().collect::<BTreeSet<u8>>(),
                    seed: 0,
                }),
            });
        }
    }
    out
}

pub fn find_scenario(catalog: &[Scenario], name: &str) -> Result<Scenario> {
    catalog
        .iter()
        .find(|s| s.name == name)
        .cloned()
        .ok_or_else(|| Error::Parameter(format!("unknown scenario `{name}`")))
}
