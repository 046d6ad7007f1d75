use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::electrodes::Electrode;

use super::potentials::Potentials;
use super::record::EcgRecord;

/// Limb leads and Wilson-referenced precordial leads from one set of
/// electrode potentials at a single instant.
pub fn leads_at(phi: &[f64; 9]) -> [f64; 8] {
    let ra = phi[Electrode::RA.index()];
    let la = phi[Electrode::LA.index()];
    let ll = phi[Electrode::LL.index()];
    let wct = (ra + la + ll) / 3.0;
    let mut out = [0.0; 8];
    out[0] = la - ra;
    out[1] = ll - ra;
    for k in 0..6 {
        out[2 + k] = phi[Electrode::V1.index() + k] - wct;
    }
    out
}

pub fn derive_leads(potentials: &Potentials) -> Result<EcgRecord> {
    if potentials.series.len() != 9 {
        return Err(Error::Validation(format!(
            "need 9 electrode series, got {}",
            potentials.series.len()
        )));
    }
    let n = potentials.series[0].len();
    if potentials.series.iter().any(|s| s.len() != n) {
        return Err(Error::Validation("electrode series differ in length".into()));
    }
    let mut leads = vec![Vec::with_capacity(n); 8];
    for t in 0..n {
        let phi: [f64; 9] = std::array::from_fn(|e| potentials.series[e][t]);
        for (l, v) in leads.iter_mut().zip(leads_at(&phi)) {
            l.push(v);
        }
    }
    Ok(EcgRecord {
        leads,
        sample_period: potentials.period,
        scenario: String::new(),
        seed: 0,
        meta: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn common_mode_is_rejected() {
        let p = Potentials { period: 1.0, series: vec![vec![2.5; 4]; 9] };
        let r = derive_leads(&p).unwrap();
        assert!(r.leads.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn missing_electrode_is_a_validation_error() {
        let p = Potentials { period: 1.0, series: vec![vec![0.0; 4]; 8] };
        assert!(matches!(derive_leads(&p), Err(Error::Validation(_))));
    }
}
