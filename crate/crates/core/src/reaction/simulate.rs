use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::activation::ActivationMap;
use crate::error::{Error, Result};

use super::cell::{ms_step, stimulus, CalibrationTable, CellState, ReactionParams};

/// Sampled transmembrane voltages, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageTraces {
    pub node_count: usize,
    pub sample_count: usize,
    /// Sample period (ms); sample `k` is at `k * period`.
    pub period: f64,
    pub data: Vec<f64>,
}

impl VoltageTraces {
    pub fn node(&self, i: usize) -> &[f64] {
        &self.data[i * self.sample_count..(i + 1) * self.sample_count]
    }

    /// All node values at sample `k`.
    pub fn at(&self, k: usize) -> Vec<f64> {
        (0..self.node_count).map(|i| self.data[i * self.sample_count + k]).collect()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.period
    }

    pub fn write_ctvolt(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(VOLT_MAGIC)?;
        w.write_all(&(self.node_count as u64).to_le_bytes())?;
        w.write_all(&(self.sample_count as u64).to_le_bytes())?;
        for x in &self.data {
            w.write_all(&(*x as f32).to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a trace dump; the file does not carry the sample period.
    pub fn read_ctvolt(path: &Path, period: f64) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| Error::Format("truncated ctvolt header".into()))?;
        if &magic != VOLT_MAGIC {
            return Err(Error::Format("not a ctvolt file".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let node_count = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let sample_count = u64::from_le_bytes(b8) as usize;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != node_count * sample_count * 4 {
            return Err(Error::Format("ctvolt payload size mismatch".into()));
        }
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        Ok(VoltageTraces { node_count, sample_count, period, data })
    }
}

pub const VOLT_MAGIC: &[u8; 8] = b"CTVOLT1\n";

/// Largest |u| before the integration is declared unstable.
const BLOW_UP: f64 = 2.0;

/// Integrates every node's cell model over the window, calling `observe`
/// with the sample index and all node voltages at each recorded step.
pub fn simulate_stream<F>(t_a: &[f64], tau_close: &[f64], p: &ReactionParams, mut observe: F) -> Result<()>
where
    F: FnMut(usize, &[f64]) -> Result<()>,
{
    p.check()?;
    if t_a.len() != tau_close.len() {
        return Err(Error::Parameter("activation and tau_close lengths differ".into()));
    }
    if let Some(i) = t_a.iter().position(|t| !t.is_finite()) {
        return Err(Error::Validation(format!("node {i} has no finite activation time")));
    }
    let n = t_a.len();
    let mut u = vec![CellState::REST.u; n];
    let mut w = vec![CellState::REST.w; n];
    observe(0, &u)?;
    let steps = p.steps();
    for k in 0..steps {
        let t = k as f64 * p.dt;
        let bad = u
            .par_iter_mut()
            .zip(w.par_iter_mut())
            .enumerate()
            .filter_map(|(i, (ui, wi))| {
                let s = ms_step(CellState { u: *ui, w: *wi }, p, tau_close[i], stimulus(t, t_a[i], p));
                *ui = s.u;
                *wi = s.w;
                (!s.u.is_finite() || s.u.abs() > BLOW_UP).then_some(i)
            })
            .min();
        if let Some(node) = bad {
            return Err(Error::Integration { node, dt: p.dt });
        }
        if (k + 1) % p.record_every == 0 {
            observe((k + 1) / p.record_every, &u)?;
        }
    }
    Ok(())
}

pub fn sample_count(p: &ReactionParams) -> usize {
    p.steps() / p.record_every + 1
}

/// Per-node `tau_close` looked up from a calibration table.
pub fn tau_close_field(apd: &[f64], table: &CalibrationTable) -> Vec<f64> {
    apd.iter().map(|&a| table.tau_close(a)).collect()
}

/// Builds a table spanning the given APD field.
pub fn table_for(apd: &[f64], p: &ReactionParams) -> Result<CalibrationTable> {
    let lo = apd.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = apd.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    CalibrationTable::build(lo, hi, CalibrationTable::DEFAULT_STEP, p)
}

pub fn simulate_transmembrane(activation: &ActivationMap, apd: &[f64], p: &ReactionParams) -> Result<VoltageTraces> {
    let table = table_for(apd, p)?;
    simulate_with_table(activation, apd, p, &table)
}

pub fn simulate_with_table(
    activation: &ActivationMap,
    apd: &[f64],
    p: &ReactionParams,
    table: &CalibrationTable,
) -> Result<VoltageTraces> {
    if apd.len() != activation.t_a.len() {
        return Err(Error::Parameter("APD field and activation map differ in length".into()));
    }
    let n = apd.len();
    let m = sample_count(p);
    let mut data = vec![0.0; n * m];
    let tau = tau_close_field(apd, table);
    simulate_stream(&activation.t_a, &tau, p, |k, u| {
        for (i, &x) in u.iter().enumerate() {
            data[i * m + k] = x;
        }
        Ok(())
    })?;
    Ok(VoltageTraces { node_count: n, sample_count: m, period: p.record_period(), data })
}
