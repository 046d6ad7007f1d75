//! `.ctsamp` files: one scenario's (X, S, Y) triple.
//!
//! ```text
//! "CTSAMP1\n"
//! meta_len u32, meta JSON (utf-8)
//! X f32 V x 7    node xyz (cm) then tm, ab, rt, tv
//! S f32 T x 8    normalized leads I, II, V1..V6
//! Y u8  V        0 normal, 1 scar, 2 border zone
//! ```
//! `V` and `T` are taken from the metadata.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ecg::LEAD_NAMES;
use crate::error::{Error, Result};

pub const SAMPLE_MAGIC: &[u8; 8] = b"CTSAMP1\n";
pub const X_COLUMNS: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub mesh_id: String,
    pub scenario: String,
    pub transmurality: String,
    pub seed: u64,
    pub nodes: usize,
    pub samples: usize,
    pub sample_period_ms: f64,
    pub leads: Vec<String>,
    pub node_sampling: String,
    pub normalization: String,
    /// Scar found empty after thresholding.
    pub degenerate: bool,
    /// Effective configuration, JSON.
    pub config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSample {
    pub meta: SampleMeta,
    /// Row-major V x 7.
    pub x: Vec<f32>,
    /// Row-major T x 8.
    pub s: Vec<f32>,
    pub y: Vec<u8>,
}

impl CohortSample {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::with_capacity(16 + meta.len() + 4 * (self.x.len() + self.s.len()) + self.y.len());
        out.extend_from_slice(SAMPLE_MAGIC);
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        for v in self.x.iter().chain(&self.s) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.y);
        Ok(out)
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("ctsamp: {m}"));
        if b.len() < 12 || &b[..8] != SAMPLE_MAGIC {
            return Err(bad("missing magic"));
        }
        let meta_len = u32::from_le_bytes(b[8..12].try_into().unwrap()) as usize;
        let body = b.get(12 + meta_len..).ok_or_else(|| bad("truncated metadata"))?;
        let meta: SampleMeta = serde_json::from_slice(&b[12..12 + meta_len]).map_err(|e| bad(&e.to_string()))?;
        let (nx, ns) = (meta.nodes * X_COLUMNS, meta.samples * meta.leads.len());
        if body.len() != 4 * (nx + ns) + meta.nodes {
            return Err(bad("payload size does not match the metadata"));
        }
        let floats: Vec<f32> =
            body[..4 * (nx + ns)].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(CohortSample {
            x: floats[..nx].to_vec(),
            s: floats[nx..].to_vec(),
            y: body[4 * (nx + ns)..].to_vec(),
            meta,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Y expanded to one-hot rows (normal, scar, bz).
    pub fn y_one_hot(&self) -> Vec<[u8; 3]> {
        self.y
            .iter()
            .map(|&c| {
                let mut r = [0u8; 3];
                if let Some(slot) = r.get_mut(c as usize) {
                    *slot = 1;
                }
                r
            })
            .collect()
    }

    /// Lead `k` of S as a series.
    pub fn lead(&self, k: usize) -> Vec<f64> {
        let l = self.meta.leads.len();
        (0..self.meta.samples).map(|t| self.s[t * l + k] as f64).collect()
    }

    /// Schema check against the expected node and sample counts.
    pub fn check_schema(&self, nodes: usize, samples: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.meta.nodes != nodes || self.y.len() != nodes || self.x.len() != nodes * X_COLUMNS {
            return bad(format!("expected {nodes} nodes, found {}", self.meta.nodes));
        }
        if self.meta.samples != samples || self.s.len() != samples * LEAD_NAMES.len() {
            return bad(format!("expected {samples} samples, found {}", self.meta.samples));
        }
        if self.meta.leads != LEAD_NAMES {
            return bad("lead set differs from I, II, V1-V6".into());
        }
        if self.y_one_hot().iter().any(|r| r.iter().map(|&v| v as u32).sum::<u32>() != 1) {
            return bad("Y rows are not one-hot".into());
        }
        if self.x.iter().chain(&self.s).any(|v| !v.is_finite()) {
            return bad("non-finite value in X or S".into());
        }
        Ok(())
    }
}
