//! Two-variable Mitchell-Schaeffer kinetics and APD calibration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReactionParams {
    pub c_m: f64,
    /// ms
    pub tau_in: f64,
    pub tau_out: f64,
    pub tau_open: f64,
    pub u_gate: f64,
    /// Stimulus duration (ms).
    pub t_foot: f64,
    pub i_foot: f64,
    /// Integration step (ms).
    pub dt: f64,
    /// Simulation window (ms).
    pub t_end: f64,
    /// Keep every `record_every`-th step in stored traces.
    pub record_every: usize,
}

impl Default for ReactionParams {
    fn default() -> Self {
        ReactionParams {
            c_m: 1.0,
            tau_in: 0.3,
            tau_out: 6.0,
            tau_open: 120.0,
            u_gate: 0.13,
            t_foot: 2.0,
            i_foot: 0.3,
            dt: 0.1,
            t_end: 500.0,
            record_every: 10,
        }
    }
}

impl ReactionParams {
    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_foot > 0.0 && self.t_end > 0.0 && self.c_m > 0.0) {
            return Err(Error::Parameter("dt, t_foot, t_end and c_m must be positive".into()));
        }
        if !(self.u_gate > 0.0 && self.u_gate < 1.0) {
            return Err(Error::Parameter("u_gate must lie in (0, 1)".into()));
        }
        if !(self.tau_in > 0.0 && self.tau_out > 0.0 && self.tau_open > 0.0) {
            return Err(Error::Parameter("time constants must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Period of stored samples (ms).
    pub fn record_period(&self) -> f64 {
        self.dt * self.record_every as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub u: f64,
    pub w: f64,
}

impl CellState {
    pub const REST: CellState = CellState { u: 0.0, w: 1.0 };
}

/// One forward-Euler step; `stim` is the applied current at the step start.
#[inline]
pub fn ms_step(s: CellState, p: &ReactionParams, tau_close: f64, stim: f64) -> CellState {
    let CellState { u, w } = s;
    let du = w * u * u * (1.0 - u) / p.tau_in - u / p.tau_out + stim / p.c_m;
    let dw = if u < p.u_gate { (1.0 - w) / p.tau_open } else { -w / tau_close };
    CellState { u: u + p.dt * du, w: w + p.dt * dw }
}

/// Stimulus current at `t` for a node activated at `t_a`.
#[inline]
pub fn stimulus(t: f64, t_a: f64, p: &ReactionParams) -> f64 {
    if t >= t_a && t < t_a + p.t_foot {
        p.i_foot
    } else {
        0.0
    }
}

/// Action potential duration at 90% repolarization of a sampled trace.
///
/// Upstroke and repolarization are both taken where `u` crosses 10% of its
/// peak, with linear interpolation between samples.
pub fn apd90(u: &[f64], period: f64) -> Option<f64> {
    let peak = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let level = 0.1 * peak;
    let cross = |k: usize| {
        let (a, b) = (u[k], u[k + 1]);
        (k as f64 + (level - a) / (b - a)) * period
    };
    let up = (0..u.len() - 1).find(|&k| u[k] < level && u[k + 1] >= level)?;
    let down = (up + 1..u.len() - 1).find(|&k| u[k] >= level && u[k + 1] < level)?;
    Some(cross(down) - cross(up))
}

/// Single-cell APD90 for a given `tau_close`, stimulated at t = 0.
pub fn single_cell_apd(tau_close: f64, p: &ReactionParams) -> Option<f64> {
    let window = (6.0 * tau_close).max(p.t_end) + 100.0;
    let steps = (window / p.dt).round() as usize;
    let mut s = CellState::REST;
    let mut u = Vec::with_capacity(steps + 1);
    u.push(s.u);
    for k in 0..steps {
        s = ms_step(s, p, tau_close, stimulus(k as f64 * p.dt, 0.0, p));
        u.push(s.u);
    }
    apd90(&u, p.dt)
}

pub const APD_TARGET_RANGE: (f64, f64) = (100.0, 500.0);

/// `tau_close` whose single-cell APD90 matches `apd_target`, by bisection.
pub fn calibrate_ms_for_apd(apd_target: f64, p: &ReactionParams) -> Result<f64> {
    let (lo_apd, hi_apd) = APD_TARGET_RANGE;
    if !(lo_apd..=hi_apd).contains(&apd_target) {
        return Err(Error::Calibration(format!("APD target {apd_target} ms outside [{lo_apd}, {hi_apd}]")));
    }
    p.check()?;
    let apd = |tau: f64| single_cell_apd(tau, p).unwrap_or(f64::NAN);
    let (mut lo, mut hi) = (10.0, 1000.0);
    let (f_lo, f_hi) = (apd(lo) - apd_target, apd(hi) - apd_target);
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Calibration(format!(
            "tau_close interval [{lo}, {hi}] does not bracket APD {apd_target} ms"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if apd(mid) < apd_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Calibrated `tau_close` on a regular APD grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub apd_start: f64,
    pub apd_step: f64,
    pub tau_close: Vec<f64>,
}

impl CalibrationTable {
    pub const DEFAULT_STEP: f64 = 2.0;

    /// Covers `[apd_lo, apd_hi]` with grid spacing `step`.
    pub fn build(apd_lo: f64, apd_hi: f64, step: f64, p: &ReactionParams) -> Result<Self> {
        use rayon::prelude::*;
        if !(step > 0.0) || !(apd_hi >= apd_lo) {
            return Err(Error::Parameter("bad calibration grid".into()));
        }
        let start = (apd_lo / step).floor() * step;
        let n = ((apd_hi - start) / step).ceil() as usize + 1;
        let tau_close = (0..n)
            .into_par_iter()
            .map(|k| calibrate_ms_for_apd(start + k as f64 * step, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(CalibrationTable { apd_start: start, apd_step: step, tau_close })
    }

    pub fn tau_close(&self, apd: f64) -> f64 {
        let x = ((apd - self.apd_start) / self.apd_step).clamp(0.0, (self.tau_close.len() - 1) as f64);
        let k = (x.floor() as usize).min(self.tau_close.len().saturating_sub(2));
        let f = x - k as f64;
        if self.tau_close.len() == 1 {
            return self.tau_close[0];
        }
        self.tau_close[k] * (1.0 - f) + self.tau_close[k + 1] * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_is_a_fixed_point() {
        let p = ReactionParams::default();
        let s = ms_step(CellState::REST, &p, 150.0, 0.0);
        assert_eq!(s, CellState::REST);
    }

    #[test]
    fn apd90_of_a_box_pulse() {
        let mut u = vec![0.0; 100];
        for x in &mut u[10..60] {
            *x = 1.0;
        }
        let apd = apd90(&u, 1.0).unwrap();
        // crossings at 10% of the peak: 9.1 up, 59.9 down
        assert!((apd - 50.8).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_target_rejected() {
        let p = ReactionParams::default();
        assert!(matches!(calibrate_ms_for_apd(90.0, &p), Err(Error::Calibration(_))));
        assert!(matches!(calibrate_ms_for_apd(600.0, &p), Err(Error::Calibration(_))));
    }

    #[test]
    fn longer_apd_needs_slower_gate_closing() {
        let p = ReactionParams::default();
        let a = calibrate_ms_for_apd(189.4, &p).unwrap();
        let b = calibrate_ms_for_apd(330.7, &p).unwrap();
        assert!(b > a);
        for (tau, target) in [(a, 189.4), (b, 330.7)] {
            assert!((single_cell_apd(tau, &p).unwrap() - target).abs() < 2.0);
        }
    }
}
