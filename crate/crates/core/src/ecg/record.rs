use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

pub const LEAD_NAMES: [&str; 8] = ["I", "II", "V1", "V2", "V3", "V4", "V5", "V6"];
pub const RESAMPLED_LEN: usize = 512;

/// Eight-lead record; `leads[k]` follows [`LEAD_NAMES`].
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub leads: Vec<Vec<f64>>,
    /// ms between samples
    pub sample_period: f64,
    pub scenario: String,
    pub seed: u64,
    /// Free-form provenance (normalization mode, scale, ...).
    pub meta: BTreeMap<String, String>,
}

impl EcgRecord {
    pub fn len(&self) -> usize {
        self.leads.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self) -> Result<()> {
        if self.leads.len() != LEAD_NAMES.len() {
            return Err(Error::Validation(format!("record has {} leads, expected 8", self.leads.len())));
        }
        let n = self.len();
        if self.leads.iter().any(|l| l.len() != n) {
            return Err(Error::Validation("leads differ in length".into()));
        }
        Ok(())
    }

    pub fn lead(&self, name: &str) -> Option<&[f64]> {
        LEAD_NAMES.iter().position(|&l| l == name).map(|k| self.leads[k].as_slice())
    }

    /// Einthoven lead III, reconstructed as II − I.
    pub fn lead_iii(&self) -> Vec<f64> {
        self.leads[1].iter().zip(&self.leads[0]).map(|(ii, i)| ii - i).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.leads.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Time of sample `k` in ms.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.sample_period
    }

    pub fn to_ctecg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# leads: {}", LEAD_NAMES.join(","));
        let _ = writeln!(s, "# T: {}", self.len());
        let _ = writeln!(s, "# sample_period_ms: {:?}", self.sample_period);
        let _ = writeln!(s, "# scenario: {}", self.scenario);
        let _ = writeln!(s, "# seed: {}", self.seed);
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# meta.{k}: {}", v.replace('\n', " "));
        }
        s.push_str(&LEAD_NAMES.join(","));
        s.push('\n');
        for t in 0..self.len() {
            let row: Vec<String> = self.leads.iter().map(|l| format!("{:.8e}", l[t])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_ctecg(text: &str) -> Result<Self> {
        let mut header = BTreeMap::new();
        let mut meta = BTreeMap::new();
        let mut lines = text.lines();
        let mut columns = None;
        for line in lines.by_ref() {
            if let Some(h) = line.strip_prefix("# ") {
                let (k, v) = h.split_once(": ").ok_or_else(|| Error::Format(format!("bad header line `{line}`")))?;
                match k.strip_prefix("meta.") {
                    Some(m) => meta.insert(m.to_owned(), v.to_owned()),
                    None => header.insert(k.to_owned(), v.to_owned()),
                };
            } else {
                columns = Some(line);
                break;
            }
        }
        if columns != Some(LEAD_NAMES.join(",").as_str()) {
            return Err(Error::Format("missing or unexpected lead columns".into()));
        }
        let get = |k: &str| header.get(k).ok_or_else(|| Error::Format(format!("header lacks `{k}`")));
        let t: usize = get("T")?.parse().map_err(|_| Error::Format("bad T".into()))?;
        let sample_period: f64 = get("sample_period_ms")?.parse().map_err(|_| Error::Format("bad period".into()))?;
        let seed: u64 = get("seed")?.parse().map_err(|_| Error::Format("bad seed".into()))?;
        let mut leads = vec![Vec::with_capacity(t); 8];
        for line in lines {
            let vals: Vec<&str> = line.split(',').collect();
            if vals.len() != 8 {
                return Err(Error::Format("row does not have 8 columns".into()));
            }
            for (l, v) in leads.iter_mut().zip(vals) {
                l.push(v.trim().parse().map_err(|_| Error::Format(format!("bad sample `{v}`")))?);
            }
        }
        if leads[0].len() != t {
            return Err(Error::Format(format!("header says {t} samples, body has {}", leads[0].len())));
        }
        Ok(EcgRecord { leads, sample_period, scenario: get("scenario")?.clone(), seed, meta })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_ctecg())?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_ctecg(&std::fs::read_to_string(path)?)
    }
}

/// Linear interpolation of `x` (uniform samples) onto `n` uniform samples
/// spanning the same window.
pub fn resample_linear(x: &[f64], n: usize) -> Vec<f64> {
    match (x.len(), n) {
        (_, 0) => Vec::new(),
        (0, _) => vec![0.0; n],
        (1, _) => vec![x[0]; n],
        (m, 1) => vec![x[m - 1]],
        (m, _) => (0..n)
            .map(|j| {
                let pos = j as f64 * (m - 1) as f64 / (n - 1) as f64;
                let k = (pos.floor() as usize).min(m - 2);
                let f = pos - k as f64;
                if f == 0.0 {
                    x[k]
                } else {
                    x[k] + f * (x[k + 1] - x[k])
                }
            })
            .collect(),
    }
}

/// Resamples to `t_out` samples over the same window, then divides every
/// lead by the record's global max |value|.
pub fn normalize_and_resample(record: &EcgRecord, t_out: usize) -> Result<EcgRecord> {
    record.check()?;
    if record.is_empty() || t_out == 0 {
        return Err(Error::Validation("cannot resample an empty record".into()));
    }
    let n = record.len();
    let window = (n - 1) as f64 * record.sample_period;
    let mut out = record.clone();
    out.leads = record.leads.iter().map(|l| resample_linear(l, t_out)).collect();
    out.sample_period = if t_out > 1 { window / (t_out - 1) as f64 } else { window };
    let scale = out.max_abs();
    if scale > 0.0 {
        for x in out.leads.iter_mut().flatten() {
            *x /= scale;
        }
        out.meta.insert("normalization".into(), "global_max_abs".into());
        out.meta.insert("scale".into(), format!("{scale:e}"));
    } else {
        warn!("all-zero record `{}`; amplitude normalization skipped", record.scenario);
        out.meta.insert("normalization".into(), "skipped_all_zero".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(leads: Vec<Vec<f64>>) -> EcgRecord {
        EcgRecord { leads, sample_period: 1.0, scenario: "x".into(), seed: 3, meta: BTreeMap::new() }
    }

    #[test]
    fn constant_series_resamples_to_constant() {
        for m in [1, 2, 7, 501, 1000] {
            let r = resample_linear(&vec![0.37; m], 512);
            assert_eq!(r.len(), 512);
            assert!(r.iter().all(|&v| v == 0.37));
        }
    }

    #[test]
    fn normalized_peak_is_one() {
        let leads: Vec<Vec<f64>> = (0..8).map(|k| (0..300).map(|t| ((t * (k + 1)) as f64 * 0.01).sin() * k as f64).collect()).collect();
        let out = normalize_and_resample(&rec(leads), 512).unwrap();
        assert_eq!(out.len(), 512);
        assert_eq!(out.max_abs(), 1.0);
        assert!((out.sample_period * 511.0 - 299.0).abs() < 1e-9);
    }

    #[test]
    fn all_zero_record_is_flagged() {
        let out = normalize_and_resample(&rec(vec![vec![0.0; 10]; 8]), 512).unwrap();
        assert_eq!(out.meta["normalization"], "skipped_all_zero");
    }

    #[test]
    fn ctecg_round_trip_is_stable() {
        let leads: Vec<Vec<f64>> = (0..8).map(|k| (0..20).map(|t| (t as f64 + 0.1234567891) / (k as f64 + 3.0)).collect()).collect();
        let mut r = rec(leads);
        r.meta.insert("config".into(), "a = 1".into());
        let text = r.to_ctecg();
        let back = EcgRecord::from_ctecg(&text).unwrap();
        assert_eq!(back.to_ctecg(), text);
        for (a, b) in back.leads.iter().flatten().zip(r.leads.iter().flatten()) {
            assert!(((a - b) / b).abs() < 1e-8);
        }
        assert_eq!(back.meta, r.meta);
    }
}
