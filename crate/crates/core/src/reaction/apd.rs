use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::coords::VentricularCoords;
use crate::infarct::{Tissue, TissueMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApdParams {
    pub g_ab: f64,
    pub g_tm: f64,
    /// ms
    pub apd_min: f64,
    pub apd_max: f64,
    pub bz_apd_factor: f64,
}

impl Default for ApdParams {
    fn default() -> Self {
        ApdParams { g_ab: 0.7, g_tm: 0.3, apd_min: 189.4, apd_max: 330.7, bz_apd_factor: 1.3 }
    }
}

impl ApdParams {
    pub fn check(&self) -> Result<()> {
        if !(self.apd_min < self.apd_max) {
            return Err(Error::Parameter("apd_min must be below apd_max".into()));
        }
        if !(self.bz_apd_factor >= 1.0) {
            return Err(Error::Parameter("bz_apd_factor must be at least 1".into()));
        }
        Ok(())
    }

    pub fn q(&self, ab: f64, tm: f64) -> f64 {
        self.g_ab * ab + self.g_tm * tm
    }
}

/// APD before border-zone prolongation.
pub fn baseline_apd(coords: &VentricularCoords, params: &ApdParams) -> Result<Vec<f64>> {
    params.check()?;
    let q: Vec<f64> = (0..coords.len()).map(|i| params.q(coords.ab[i], coords.tm[i])).collect();
    let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
    let q_max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(q_max > q_min) {
        warn!("APD gradient field is constant; using the midpoint APD everywhere");
        return Ok(vec![0.5 * (params.apd_min + params.apd_max); q.len()]);
    }
    Ok(q.iter()
        .map(|&qi| {
            let s = (qi - q_min) / (q_max - q_min);
            params.apd_min * (1.0 - s) + params.apd_max * s
        })
        .collect())
}

/// Per-node APD (ms): linear in the gradient field between the bounds, then
/// prolonged in the border zone.
pub fn apd_field(coords: &VentricularCoords, tissue: &TissueMap, params: &ApdParams) -> Result<Vec<f64>> {
    if tissue.len() != coords.len() {
        return Err(Error::Parameter("tissue map and coordinates differ in length".into()));
    }
    let mut apd = baseline_apd(coords, params)?;
    for (a, &t) in apd.iter_mut().zip(&tissue.labels) {
        if t == Tissue::BorderZone {
            *a *= params.bz_apd_factor;
        }
    }
    Ok(apd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coords::Ventricle;

    fn coords(pts: &[(f64, f64)]) -> VentricularCoords {
        VentricularCoords {
            tm: pts.iter().map(|p| p.1).collect(),
            ab: pts.iter().map(|p| p.0).collect(),
            rt: vec![0.0; pts.len()],
            tv: vec![Ventricle::Lv; pts.len()],
        }
    }

    #[test]
    fn endpoints_are_exact() {
        let c = coords(&[(0.0, 0.0), (0.4, 0.5), (1.0, 1.0)]);
        let apd = apd_field(&c, &TissueMap::healthy(3), &ApdParams::default()).unwrap();
        assert_eq!(apd[0], 189.4);
        assert_eq!(apd[2], 330.7);
    }

    #[test]
    fn constant_q_gives_midpoint() {
        let c = coords(&[(0.5, 0.5), (0.5, 0.5)]);
        let apd = apd_field(&c, &TissueMap::healthy(2), &ApdParams::default()).unwrap();
        assert_eq!(apd, vec![0.5 * (189.4 + 330.7); 2]);
    }

    #[test]
    fn tm_only_gradient() {
        let p = ApdParams { g_ab: 0.0, g_tm: 1.0, ..Default::default() };
        let c = coords(&[(0.1, 0.3), (0.9, 0.3), (0.5, 0.0), (0.2, 1.0)]);
        let apd = apd_field(&c, &TissueMap::healthy(4), &p).unwrap();
        assert_eq!(apd[0], apd[1]);
    }
}
