//! Run configuration. Every section has serde defaults, so an empty TOML
//! document is a complete configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activation::fim::DEFAULT_TOL_MS;
use crate::activation::ConductionParams;
use crate::error::{Error, Result};
use crate::geometry::electrodes::ElectrodeSet;
use crate::geometry::generate::WallParams;
use crate::infarct::catalog::CatalogParams;
use crate::reaction::{ApdParams, ReactionParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Target mean edge length (cm).
    pub edge: f64,
    pub seed: u64,
    pub wall: WallParams,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { edge: 0.15, seed: 7, wall: WallParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberConfig {
    /// Helix angle at the endocardium (degrees).
    pub alpha_endo: f64,
    pub alpha_epi: f64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        FiberConfig { alpha_endo: 60.0, alpha_epi: -60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EikonalConfig {
    pub tol_ms: f64,
}

impl Default for EikonalConfig {
    fn default() -> Self {
        EikonalConfig { tol_ms: DEFAULT_TOL_MS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortConfig {
    pub seed: u64,
    /// Nodes per exported sample.
    pub nodes: usize,
    /// Samples per lead after resampling.
    pub samples: usize,
    pub healthy_replicates: usize,
    /// Half-width of the uniform root-onset jitter for healthy replicates (ms).
    pub root_jitter_ms: f64,
    /// Train/validation fractions of the per-mesh split; the rest is test.
    pub split_train: f64,
    pub split_val: f64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            seed: 11,
            nodes: 4096,
            samples: 512,
            healthy_replicates: 8,
            root_jitter_ms: 2.0,
            split_train: 0.70,
            split_val: 0.15,
        }
    }
}

/// Invocation settings: inputs, outputs and worker count. They do not
/// change results and are left out of the configuration echoed into outputs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvocationConfig {
    pub jobs: Option<usize>,
    pub mesh: Option<PathBuf>,
    pub mesh_dir: Option<PathBuf>,
    pub cohort: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub scenario: Option<String>,
    pub mesh_id: Option<String>,
    pub ecg_out: Option<PathBuf>,
    pub dump_voltages: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub fibers: FiberConfig,
    /// Explicit electrode positions; placed from the bounding box when absent.
    pub electrodes: Option<ElectrodeSet>,
    /// Optional TOML file with a `[scar]` table overriding `scar`.
    pub scar_catalog: Option<PathBuf>,
    pub scar: CatalogParams,
    pub conduction: ConductionParams,
    pub eikonal: EikonalConfig,
    pub apd: ApdParams,
    pub reaction: ReactionParams,
    pub cohort: CohortConfig,
    #[serde(skip_serializing)]
    pub run: InvocationConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parameter(format!("config: {e}")))
    }

    /// Reads a config file and applies its `scar_catalog` reference, if any.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let Some(cat) = cfg.scar_catalog.clone() {
            let cat = if cat.is_relative() { path.parent().unwrap_or(Path::new(".")).join(cat) } else { cat };
            cfg.scar = load_catalog_params(&cat)?;
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Single-line form for embedding in output metadata.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn check(&self) -> Result<()> {
        self.mesh.wall.check(self.mesh.edge)?;
        self.conduction.check()?;
        self.apd.check()?;
        self.reaction.check()?;
        if !(self.eikonal.tol_ms > 0.0) {
            return Err(Error::Parameter("eikonal tol_ms must be positive".into()));
        }
        if self.cohort.healthy_replicates < crate::analysis::zscore::MIN_REPLICATES {
            return Err(Error::Parameter(format!(
                "at least {} healthy replicates are needed",
                crate::analysis::zscore::MIN_REPLICATES
            )));
        }
        let c = &self.cohort;
        if !(c.split_train >= 0.0 && c.split_val >= 0.0 && c.split_train + c.split_val <= 1.0) {
            return Err(Error::Parameter("split fractions must be non-negative and sum to at most 1".into()));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct CatalogFile {
    scar: CatalogParams,
}

pub fn load_catalog_params(path: &Path) -> Result<CatalogParams> {
    let text = std::fs::read_to_string(path)?;
    let f: CatalogFile = toml::from_str(&text).map_err(|e| Error::Parameter(format!("scar catalog: {e}")))?;
    Ok(f.scar)
}
