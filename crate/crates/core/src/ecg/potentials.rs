//! Pseudo-ECG: φ_e = −Σ_elements |vol| ∇U · ∇(1/r), evaluated at centroids.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::electrodes::ElectrodeSet;
use crate::geometry::mesh::Mesh;
use crate::geometry::spatial::TetLocator;
use crate::reaction::VoltageTraces;

/// Elements per reduction chunk; chunks are summed in a fixed order.
const CHUNK: usize = 2048;

/// Precomputed per-element geometry for a fixed electrode set.
///
/// For element `e` with nodes `v0..v3`, `coef[e][k]` holds
/// `−|vol| ∇N_i · ∇(1/r_k)` for `i = 1..3`, so that
/// `φ_k = Σ_e Σ_i coef (u_i − u_0)`. Working with differences makes a
/// spatially uniform field contribute exactly zero.
pub struct LeadField {
    tets: Vec<[u32; 4]>,
    coef: Vec<[[f64; 3]; 9]>,
}

impl LeadField {
    pub fn new(mesh: &Mesh, electrodes: &ElectrodeSet) -> Result<Self> {
        let locator = TetLocator::new(mesh);
        for (e, pos) in electrodes.iter() {
            if let Some((t, _)) = locator.locate(&pos) {
                return Err(Error::Placement(format!("electrode {e} lies inside element {t}")));
            }
        }
        let coef = (0..mesh.tet_count())
            .into_par_iter()
            .map(|t| {
                let g = mesh
                    .basis_gradients(t)
                    .ok_or_else(|| Error::Topology(format!("degenerate element {t}")))?;
                let vol = mesh.signed_volume(t).abs();
                let c = mesh.centroid(t);
                let mut out = [[0.0; 3]; 9];
                for (k, pos) in electrodes.positions.iter().enumerate() {
                    let d = c - Vector3::from(*pos);
                    let r = d.norm();
                    // ∇(1/r) with r measured from the electrode
                    let grad_inv_r = -d / (r * r * r);
                    for i in 0..3 {
                        out[k][i] = -vol * g[i + 1].dot(&grad_inv_r);
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LeadField { tets: mesh.tets.clone(), coef })
    }

    /// Potentials at the nine electrodes for one nodal voltage snapshot.
    pub fn potentials(&self, u: &[f64]) -> [f64; 9] {
        let partial: Vec<[f64; 9]> = self
            .tets
            .par_chunks(CHUNK)
            .zip(self.coef.par_chunks(CHUNK))
            .map(|(tets, coefs)| {
                let mut acc = [0.0; 9];
                for (tet, c) in tets.iter().zip(coefs) {
                    let u0 = u[tet[0] as usize];
                    let du = [u[tet[1] as usize] - u0, u[tet[2] as usize] - u0, u[tet[3] as usize] - u0];
                    if du == [0.0; 3] {
                        continue;
                    }
                    for k in 0..9 {
                        acc[k] += c[k][0] * du[0] + c[k][1] * du[1] + c[k][2] * du[2];
                    }
                }
                acc
            })
            .collect();
        let mut phi = [0.0; 9];
        for p in partial {
            for k in 0..9 {
                phi[k] += p[k];
            }
        }
        phi
    }
}

/// Electrode potential series, `[electrode][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub period: f64,
    pub series: Vec<Vec<f64>>,
}

pub fn electrode_potentials(mesh: &Mesh, traces: &VoltageTraces, electrodes: &ElectrodeSet) -> Result<Potentials> {
    if traces.node_count != mesh.node_count() {
        return Err(Error::Parameter("voltage traces do not match the mesh".into()));
    }
    let lf = LeadField::new(mesh, electrodes)?;
    let mut series = vec![Vec::with_capacity(traces.sample_count); 9];
    for k in 0..traces.sample_count {
        let phi = lf.potentials(&traces.at(k));
        for (s, v) in series.iter_mut().zip(phi) {
            s.push(v);
        }
    }
    Ok(Potentials { period: traces.period, series })
}
