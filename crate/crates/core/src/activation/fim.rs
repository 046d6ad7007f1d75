//! Fast iterative method for the anisotropic Eikonal equation on tets.
//!
//! Times are in ms; the element metric is `V⁻¹` converted to ms²/cm².
//! Active nodes are updated Jacobi-style against a snapshot of the current
//! times, so the result does not depend on thread scheduling.

use log::warn;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::{Adjacency, Mesh};

pub const DEFAULT_TOL_MS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub node: usize,
    /// Onset time in ms.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
}

impl RootSet {
    pub fn check(&self, node_count: usize) -> Result<()> {
        if self.roots.is_empty() {
            return Err(Error::Parameter("root set is empty".into()));
        }
        for r in &self.roots {
            if r.node >= node_count {
                return Err(Error::Parameter(format!("root node {} out of range", r.node)));
            }
            if !(r.time >= 0.0) || !r.time.is_finite() {
                return Err(Error::Parameter(format!("root onset {} must be finite and >= 0", r.time)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMap {
    /// Activation time per node (ms); `f64::INFINITY` where no root reaches.
    pub t_a: Vec<f64>,
}

impl ActivationMap {
    pub fn unreached(&self) -> Vec<usize> {
        self.t_a.iter().enumerate().filter(|(_, t)| !t.is_finite()).map(|(i, _)| i).collect()
    }

    pub fn max_finite(&self) -> f64 {
        self.t_a.iter().copied().filter(|t| t.is_finite()).fold(f64::NEG_INFINITY, f64::max)
    }
}

struct Solver<'a> {
    mesh: &'a Mesh,
    metric: Vec<Matrix3<f64>>,
    node_tets: Adjacency,
}

impl Solver<'_> {
    fn pos(&self, v: u32) -> Vector3<f64> {
        Vector3::from(self.mesh.nodes[v as usize])
    }

    /// Smallest arrival time at `x` over all incident tets.
    fn update(&self, x: usize, t: &[f64]) -> f64 {
        let px = self.pos(x as u32);
        let mut best = f64::INFINITY;
        for &e in self.node_tets.of(x) {
            let tet = self.mesh.tets[e as usize];
            let m = &self.metric[e as usize];
            let mut others = [0u32; 3];
            let mut k = 0;
            for &v in &tet {
                if v as usize != x {
                    others[k] = v;
                    k += 1;
                }
            }
            best = best.min(tet_update(&px, others.map(|v| (self.pos(v), t[v as usize])), m));
        }
        best
    }
}

fn norm_m(d: &Vector3<f64>, m: &Matrix3<f64>) -> f64 {
    d.dot(&(m * d)).max(0.0).sqrt()
}

/// Minimum over the opposite face of `t(p) + |x - p|_M`, with `t` linear on
/// the face. Non-finite vertex times drop the candidates that need them.
pub(crate) fn tet_update(x: &Vector3<f64>, face: [(Vector3<f64>, f64); 3], m: &Matrix3<f64>) -> f64 {
    let mut best = f64::INFINITY;
    for (p, tp) in &face {
        if tp.is_finite() {
            best = best.min(tp + norm_m(&(x - p), m));
        }
    }
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let ((pa, ta), (pc, tc)) = (face[i], face[j]);
        if !(ta.is_finite() && tc.is_finite()) {
            continue;
        }
        let e = pa - pc;
        let d0 = x - pc;
        let me = m * e;
        let a = e.dot(&me);
        let b = d0.dot(&me);
        let c = d0.dot(&(m * d0));
        let delta = ta - tc;
        let denom = 1.0 - delta * delta / a;
        if a <= 0.0 || denom <= 0.0 {
            continue;
        }
        let s = ((c - b * b / a).max(0.0) / denom).sqrt();
        let lambda = (b - delta * s) / a;
        if (0.0..=1.0).contains(&lambda) {
            best = best.min(tc + delta * lambda + s);
        }
    }
    let [(pa, ta), (pb, tb), (pc, tc)] = face;
    if ta.is_finite() && tb.is_finite() && tc.is_finite() {
        let e1 = pa - pc;
        let e2 = pb - pc;
        let d0 = x - pc;
        let (me1, me2) = (m * e1, m * e2);
        let a = Matrix2::new(e1.dot(&me1), e1.dot(&me2), e2.dot(&me1), e2.dot(&me2));
        let b = Vector2::new(d0.dot(&me1), d0.dot(&me2));
        let c = d0.dot(&(m * d0));
        let delta = Vector2::new(ta - tc, tb - tc);
        if let Some(ai) = a.try_inverse() {
            let denom = 1.0 - delta.dot(&(ai * delta));
            if denom > 0.0 {
                let s = ((c - b.dot(&(ai * b))).max(0.0) / denom).sqrt();
                let lambda = ai * (b - delta * s);
                if lambda.x >= 0.0 && lambda.y >= 0.0 && lambda.x + lambda.y <= 1.0 {
                    best = best.min(tc + delta.dot(&lambda) + s);
                }
            }
        }
    }
    best
}

/// Element metrics in ms²/cm² from conduction tensors in cm²/s².
pub fn metrics_from_tensors(tensors: &[Matrix3<f64>]) -> Result<Vec<Matrix3<f64>>> {
    tensors
        .iter()
        .enumerate()
        .map(|(e, v)| {
            let sym = (v + v.transpose()) * 0.5;
            if (v - sym).norm() > 1e-9 * v.norm().max(1.0) || sym.cholesky().is_none() {
                return Err(Error::Validation(format!("conduction tensor of element {e} is not positive definite")));
            }
            let inv = sym.cholesky().unwrap().inverse();
            Ok(inv * 1e6)
        })
        .collect()
}

pub fn solve_eikonal(mesh: &Mesh, tensors: &[Matrix3<f64>], roots: &RootSet) -> Result<ActivationMap> {
    solve_eikonal_with_tol(mesh, tensors, roots, DEFAULT_TOL_MS)
}

pub fn solve_eikonal_with_tol(
    mesh: &Mesh,
    tensors: &[Matrix3<f64>],
    roots: &RootSet,
    tol: f64,
) -> Result<ActivationMap> {
    let n = mesh.node_count();
    if tensors.len() != mesh.tet_count() {
        return Err(Error::Parameter("one tensor per element required".into()));
    }
    roots.check(n)?;
    let solver = Solver { mesh, metric: metrics_from_tensors(tensors)?, node_tets: mesh.node_tets() };
    let neighbors = mesh.node_neighbors();

    let mut t = vec![f64::INFINITY; n];
    let mut fixed = vec![false; n];
    for r in &roots.roots {
        t[r.node] = t[r.node].min(r.time);
        fixed[r.node] = true;
    }
    let mut active = vec![false; n];
    let mut list: Vec<usize> = Vec::new();
    for r in &roots.roots {
        for &nb in neighbors.of(r.node) {
            let nb = nb as usize;
            if !fixed[nb] && !active[nb] {
                active[nb] = true;
                list.push(nb);
            }
        }
    }

    let max_rounds = 1000 + 50 * n;
    let mut rounds = 0;
    loop {
        while !list.is_empty() {
            rounds += 1;
            if rounds > max_rounds {
                warn!("eikonal solve stopped after {rounds} rounds without full convergence");
                break;
            }
            list.sort_unstable();
            let updates: Vec<f64> = list.par_iter().map(|&x| solver.update(x, &t)).collect();
            let mut converged = Vec::new();
            let mut keep = Vec::new();
            for (&x, &q) in list.iter().zip(&updates) {
                let p = t[x];
                let q = q.min(p);
                t[x] = q;
                if p - q < tol || (p.is_infinite() && q.is_infinite()) {
                    converged.push(x);
                } else {
                    keep.push(x);
                }
            }
            for &x in &converged {
                active[x] = false;
            }
            let mut candidates: Vec<usize> = Vec::new();
            for &x in &converged {
                if !t[x].is_finite() {
                    continue;
                }
                for &nb in neighbors.of(x) {
                    let nb = nb as usize;
                    if !fixed[nb] && !active[nb] {
                        active[nb] = true; // temporary mark to dedupe
                        candidates.push(nb);
                    }
                }
            }
            let cand_q: Vec<f64> = candidates.par_iter().map(|&x| solver.update(x, &t)).collect();
            for (&x, &q) in candidates.iter().zip(&cand_q) {
                if q < t[x] {
                    t[x] = q;
                    keep.push(x);
                } else {
                    active[x] = false;
                }
            }
            list = keep;
        }
        if rounds > max_rounds {
            break;
        }
        // verification sweep over every free node
        let all: Vec<f64> = (0..n).into_par_iter().map(|x| if fixed[x] { t[x] } else { solver.update(x, &t) }).collect();
        for x in 0..n {
            if !fixed[x] && all[x] < t[x] - tol {
                t[x] = all[x];
                active[x] = true;
                list.push(x);
            }
        }
        if list.is_empty() {
            break;
        }
    }
    let map = ActivationMap { t_a: t };
    let unreached = map.unreached().len();
    if unreached > 0 {
        warn!("{unreached} nodes are not connected to any root");
    }
    Ok(map)
}

/// Largest decrease one more update sweep over every non-root node would
/// make to `map`.
pub fn resweep_decrease(mesh: &Mesh, tensors: &[Matrix3<f64>], roots: &RootSet, map: &ActivationMap) -> Result<f64> {
    if tensors.len() != mesh.tet_count() || map.t_a.len() != mesh.node_count() {
        return Err(Error::Parameter("tensors and activation map must match the mesh".into()));
    }
    let solver = Solver { mesh, metric: metrics_from_tensors(tensors)?, node_tets: mesh.node_tets() };
    let mut fixed = vec![false; mesh.node_count()];
    for r in &roots.roots {
        fixed[r.node] = true;
    }
    Ok((0..mesh.node_count())
        .into_par_iter()
        .filter(|&x| !fixed[x] && map.t_a[x].is_finite())
        .map(|x| (map.t_a[x] - solver.update(x, &map.t_a)).max(0.0))
        .reduce(|| 0.0, f64::max))
}
