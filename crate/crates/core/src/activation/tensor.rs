use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fibers::FiberField;
use crate::geometry::mesh::Mesh;
use crate::infarct::{Tissue, TissueMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConductionParams {
    /// cm/s along the fiber.
    pub v_fiber: f64,
    pub v_sheet: f64,
    pub v_normal: f64,
    /// Velocity fraction in scar.
    pub scar_scale: f64,
    /// Velocity fraction in the border zone.
    pub bz_scale: f64,
}

impl Default for ConductionParams {
    fn default() -> Self {
        ConductionParams { v_fiber: 65.0, v_sheet: 51.0, v_normal: 48.0, scar_scale: 0.1, bz_scale: 0.5 }
    }
}

impl ConductionParams {
    pub fn check(&self) -> Result<()> {
        if !(self.v_fiber > 0.0 && self.v_sheet > 0.0 && self.v_normal > 0.0) {
            return Err(Error::Parameter("conduction velocities must be positive".into()));
        }
        if !(0.0 < self.scar_scale && self.scar_scale <= self.bz_scale && self.bz_scale <= 1.0) {
            return Err(Error::Parameter("need 0 < scar_scale <= bz_scale <= 1".into()));
        }
        Ok(())
    }

    pub fn scale(&self, t: Tissue) -> f64 {
        match t {
            Tissue::Normal => 1.0,
            Tissue::BorderZone => self.bz_scale,
            Tissue::Scar => self.scar_scale,
        }
    }
}

/// Majority label of the element's nodes; ties go to the slower class.
pub fn element_tissue(tet: &[u32; 4], tissue: &TissueMap) -> Tissue {
    let mut counts = [0u8; 3];
    for &v in tet {
        counts[tissue.labels[v as usize].slowness_rank() as usize] += 1;
    }
    let best = (0..3).max_by_key(|&r| (counts[r], r)).unwrap();
    [Tissue::Normal, Tissue::BorderZone, Tissue::Scar][best]
}

/// Per-element conduction tensor `V` in cm²/s².
pub fn build_velocity_tensor(
    mesh: &Mesh,
    fibers: &FiberField,
    tissue: &TissueMap,
    params: &ConductionParams,
) -> Result<Vec<Matrix3<f64>>> {
    params.check()?;
    if fibers.triads.len() != mesh.tet_count() || tissue.len() != mesh.node_count() {
        return Err(Error::Parameter("fibers/tissue do not match the mesh".into()));
    }
    let (vf2, vs2, vn2) = (params.v_fiber.powi(2), params.v_sheet.powi(2), params.v_normal.powi(2));
    mesh.tets
        .iter()
        .zip(&fibers.triads)
        .enumerate()
        .map(|(t, (tet, tr))| {
            if !tr.is_orthonormal(1e-6) {
                return Err(Error::Validation(format!("fiber frame of element {t} is not orthonormal")));
            }
            let s2 = params.scale(element_tissue(tet, tissue)).powi(2);
            Ok((tr.f * tr.f.transpose() * vf2 + tr.s * tr.s.transpose() * vs2 + tr.n * tr.n.transpose() * vn2) * s2)
        })
        .collect()
}
