use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::laplace;
use super::mesh::{Mesh, SurfaceTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ventricle {
    Lv,
    Rv,
}

impl Ventricle {
    pub fn as_f64(self) -> f64 {
        match self {
            Ventricle::Lv => 0.0,
            Ventricle::Rv => 1.0,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v > 0.5 {
            Ventricle::Rv
        } else {
            Ventricle::Lv
        }
    }
}

/// Per-node ventricular coordinates.
///
/// * `tm`: transmural, 1 on the endocardium, 0 on the epicardium
/// * `ab`: apicobasal, 0 at the apex, 1 at the base
/// * `rt`: rotational in [0, 1), origin at the anterior LV/RV junction,
///   increasing towards the septum
/// * `tv`: ventricle membership
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VentricularCoords {
    pub tm: Vec<f64>,
    pub ab: Vec<f64>,
    pub rt: Vec<f64>,
    pub tv: Vec<Ventricle>,
}

impl VentricularCoords {
    pub fn len(&self) -> usize {
        self.tm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tm.is_empty()
    }

    pub fn at(&self, i: usize) -> NodeCoords {
        NodeCoords { tm: self.tm[i], ab: self.ab[i], rt: self.rt[i], tv: self.tv[i] }
    }

    /// Coordinates as a flat row (tm, ab, rt, tv) for export.
    pub fn row(&self, i: usize) -> [f64; 4] {
        [self.tm[i], self.ab[i], self.rt[i], self.tv[i].as_f64()]
    }

    pub fn check_bounds(&self) -> Result<()> {
        for i in 0..self.len() {
            let ok = (0.0..=1.0).contains(&self.tm[i])
                && (0.0..=1.0).contains(&self.ab[i])
                && (0.0..1.0).contains(&self.rt[i]);
            if !ok {
                return Err(Error::Validation(format!(
                    "coordinates of node {i} out of range: tm={} ab={} rt={}",
                    self.tm[i], self.ab[i], self.rt[i]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCoords {
    pub tm: f64,
    pub ab: f64,
    pub rt: f64,
    pub tv: Ventricle,
}

/// Wraps an angle-derived value into [0, 1).
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Rotational coordinate of azimuth `phi` (radians, about +z from +x) given
/// the azimuth of the anterior junction. Increasing rt runs clockwise seen
/// from the base, i.e. from the anterior junction into the septum.
pub fn rotational_from_azimuth(phi: f64, anterior_junction: f64) -> f64 {
    wrap_unit((anterior_junction - phi) / TAU)
}

/// Computes ventricular coordinates for `mesh`.
///
/// Meshes produced by the idealized generator carry their exact analytic
/// coordinates. Other meshes need surface tags: `tm` is then the harmonic
/// field between endocardium (1) and epicardium (0), `ab` the harmonic
/// field between the apex node (0) and the base (1), and `rt` the azimuth
/// about the long axis relative to `anterior_junction` (radians).
pub fn compute_ventricular_coordinates(mesh: &Mesh) -> Result<VentricularCoords> {
    if let Some(c) = &mesh.analytic_coords {
        return Ok(c.clone());
    }
    laplace_coordinates(mesh, super::aha::DEFAULT_ANTERIOR_JUNCTION)
}

pub fn laplace_coordinates(mesh: &Mesh, anterior_junction: f64) -> Result<VentricularCoords> {
    let n = mesh.node_count();
    if mesh.surface.len() != n {
        return Err(Error::Topology("mesh has no surface tags; endo/epi surfaces unknown".into()));
    }
    // every boundary node must belong to some surface
    for (face, _) in mesh.boundary_faces() {
        for v in face {
            if mesh.surface[v as usize].is_empty() {
                return Err(Error::Topology(format!("boundary node {v} has no surface class")));
            }
        }
    }
    let mut tm_bc = vec![None; n];
    let mut any_endo = false;
    let mut any_epi = false;
    for (i, tag) in mesh.surface.iter().enumerate() {
        if tag.intersects(SurfaceTag::OUTER) {
            tm_bc[i] = Some(0.0);
            any_epi = true;
        } else if tag.intersects(SurfaceTag::ENDO) {
            tm_bc[i] = Some(1.0);
            any_endo = true;
        }
    }
    if !any_endo || !any_epi {
        return Err(Error::Topology("endocardial or epicardial surface missing".into()));
    }
    let tm = laplace::solve_dirichlet(mesh, &tm_bc)?;

    // apex: the epicardial node farthest from the base plane along the long axis
    let base_nodes: Vec<usize> =
        (0..n).filter(|&i| mesh.surface[i].intersects(SurfaceTag::BASE)).collect();
    if base_nodes.is_empty() {
        return Err(Error::Topology("no base surface".into()));
    }
    let base_z = base_nodes.iter().map(|&i| mesh.nodes[i][2]).sum::<f64>() / base_nodes.len() as f64;
    let apex = (0..n)
        .filter(|&i| mesh.surface[i].intersects(SurfaceTag::OUTER))
        .max_by(|&a, &b| {
            let da = (mesh.nodes[a][2] - base_z).abs();
            let db = (mesh.nodes[b][2] - base_z).abs();
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .ok_or_else(|| Error::Topology("no epicardial node for the apex".into()))?;
    let mut ab_bc = vec![None; n];
    for &i in &base_nodes {
        ab_bc[i] = Some(1.0);
    }
    ab_bc[apex] = Some(0.0);
    let ab = laplace::solve_dirichlet(mesh, &ab_bc)?;

    let axis = Vector3::from(mesh.nodes[apex]);
    let rt = mesh
        .nodes
        .iter()
        .map(|p| {
            let d = Vector3::from(*p) - axis;
            rotational_from_azimuth(d.y.atan2(d.x), anterior_junction)
        })
        .collect();
    let clamp = |v: Vec<f64>| v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect::<Vec<_>>();
    let tv = (0..n)
        .map(|i| {
            if mesh.surface[i].contains(SurfaceTag::RV_ENDO) {
                Ventricle::Rv
            } else {
                Ventricle::Lv
            }
        })
        .collect();
    Ok(VentricularCoords { tm: clamp(tm), ab: clamp(ab), rt, tv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotational_wraps_into_unit_interval() {
        let a = 0.3;
        assert_eq!(rotational_from_azimuth(a, a), 0.0);
        let r = rotational_from_azimuth(a + 1e-9, a);
        assert!((0.0..1.0).contains(&r) && r > 0.99);
        assert!((rotational_from_azimuth(a - TAU / 4.0, a) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn wrap_unit_never_returns_one() {
        assert_eq!(wrap_unit(-1e-18), 0.0);
        assert_eq!(wrap_unit(1.0), 0.0);
    }
}
