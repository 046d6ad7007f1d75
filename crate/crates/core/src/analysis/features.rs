use serde::Serialize;

use crate::ecg::{EcgRecord, LEAD_NAMES};
use crate::error::{Error, Result};

/// Fraction of the peak cross-lead derivative that marks QRS activity.
pub const QRS_DERIVATIVE_FRACTION: f64 = 0.10;
/// QRS offset is searched in this leading fraction of the window.
pub const QRS_SEARCH_FRACTION: f64 = 0.40;
pub const ST_WINDOW_MS: f64 = 40.0;
/// T-end: last downward crossing of this fraction of the T amplitude.
pub const T_END_FRACTION: f64 = 0.05;

pub const SCALAR_NAMES: [&str; 5] = ["qrs_duration_ms", "qt_interval_ms", "r_amplitude", "st_amplitude", "t_amplitude"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhenotypeFeatures {
    pub qrs_onset_ms: f64,
    pub qrs_offset_ms: f64,
    pub t_end_ms: f64,
    pub qrs_duration_ms: f64,
    pub qt_interval_ms: f64,
    /// Max |x| inside the QRS, per lead.
    pub r_amplitude: [f64; 8],
    /// Mean over the ST window, per lead (signed).
    pub st_amplitude: [f64; 8],
    /// Signed extreme of the T wave, per lead.
    pub t_amplitude: [f64; 8],
}

fn mean_abs(x: &[f64; 8]) -> f64 {
    x.iter().map(|v| v.abs()).sum::<f64>() / 8.0
}

impl PhenotypeFeatures {
    /// The five scalar features in [`SCALAR_NAMES`] order; amplitudes are
    /// lead means of absolute values.
    pub fn scalars(&self) -> [f64; 5] {
        [
            self.qrs_duration_ms,
            self.qt_interval_ms,
            mean_abs(&self.r_amplitude),
            mean_abs(&self.st_amplitude),
            mean_abs(&self.t_amplitude),
        ]
    }
}

/// Root-mean-square over leads of the forward difference, per sample pair.
fn rms_derivative(record: &EcgRecord) -> Vec<f64> {
    let n = record.len();
    (0..n.saturating_sub(1))
        .map(|t| {
            let s: f64 = record.leads.iter().map(|l| (l[t + 1] - l[t]).powi(2)).sum();
            (s / record.leads.len() as f64).sqrt() / record.sample_period
        })
        .collect()
}

pub fn extract_features(record: &EcgRecord) -> Result<PhenotypeFeatures> {
    record.check()?;
    let n = record.len();
    let dt = record.sample_period;
    if n < 3 || !(dt > 0.0) {
        return Err(Error::Feature("record too short".into()));
    }
    let d = rms_derivative(record);
    let peak = d.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Feature(format!("flat record `{}`: no QRS", record.scenario)));
    }
    let thr = QRS_DERIVATIVE_FRACTION * peak;
    let search = ((QRS_SEARCH_FRACTION * n as f64) as usize).min(d.len());
    let onset = d[..search]
        .iter()
        .position(|&v| v > thr)
        .ok_or_else(|| Error::Feature("no QRS onset in the leading window".into()))?;
    // difference t spans samples t..t+1, so activity ends at sample last+1
    let offset = d[..search].iter().rposition(|&v| v > thr).unwrap() + 1;

    let st_len = (ST_WINDOW_MS / dt).round().max(1.0) as usize;
    let st_end = (offset + st_len).min(n - 1);
    let mut st = [0.0; 8];
    let mut r = [0.0; 8];
    for (k, l) in record.leads.iter().enumerate() {
        st[k] = l[offset..=st_end].iter().sum::<f64>() / (st_end - offset + 1) as f64;
        r[k] = l[onset..=offset].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    }

    // T wave: cross-lead RMS envelope after the ST window
    let env: Vec<f64> = (0..n)
        .map(|t| (record.leads.iter().map(|l| l[t] * l[t]).sum::<f64>() / 8.0).sqrt())
        .collect();
    let t_start = st_end;
    let t_peak = env[t_start..].iter().copied().fold(0.0, f64::max);
    let t_thr = T_END_FRACTION * t_peak;
    let t_end = (t_start..n - 1)
        .rev()
        .find(|&t| env[t] >= t_thr && env[t + 1] < t_thr)
        .map_or(n - 1, |t| t + 1);
    let mut tw = [0.0; 8];
    for (k, l) in record.leads.iter().enumerate() {
        tw[k] = l[t_start..=t_end].iter().copied().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
    }
    Ok(PhenotypeFeatures {
        qrs_onset_ms: onset as f64 * dt,
        qrs_offset_ms: offset as f64 * dt,
        t_end_ms: t_end as f64 * dt,
        qrs_duration_ms: (offset - onset) as f64 * dt,
        qt_interval_ms: (t_end - onset) as f64 * dt,
        r_amplitude: r,
        st_amplitude: st,
        t_amplitude: tw,
    })
}

/// Column names of the per-lead feature table.
pub fn per_lead_columns() -> Vec<String> {
    ["r", "st", "t"]
        .iter()
        .flat_map(|f| LEAD_NAMES.iter().map(move |l| format!("{f}_{l}")))
        .collect()
}
