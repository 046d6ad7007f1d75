//! Linear-element Laplace solve with Dirichlet data, used for coordinate
//! fields on meshes that do not carry analytic coordinates.

use crate::error::{Error, Result};

use super::mesh::Mesh;

struct Csr {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = s;
        }
    }
}

fn assemble_stiffness(mesh: &Mesh) -> Result<Csr> {
    let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(mesh.tet_count() * 16);
    for t in 0..mesh.tet_count() {
        let vol = mesh.signed_volume(t).abs();
        let g = mesh
            .basis_gradients(t)
            .ok_or_else(|| Error::Topology(format!("degenerate tet {t}")))?;
        let tet = mesh.tets[t];
        for a in 0..4 {
            for b in 0..4 {
                triplets.push((tet[a], tet[b], vol * g[a].dot(&g[b])));
            }
        }
    }
    triplets.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let n = mesh.node_count();
    let mut offsets = vec![0usize; n + 1];
    let mut cols = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut last: Option<(u32, u32)> = None;
    for (r, c, v) in triplets {
        if last == Some((r, c)) {
            *vals.last_mut().unwrap() += v;
        } else {
            cols.push(c);
            vals.push(v);
            offsets[r as usize + 1] += 1;
            last = Some((r, c));
        }
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    Ok(Csr { offsets, cols, vals })
}

/// Solves the discrete Laplace equation with the given Dirichlet values
/// (natural boundary conditions elsewhere) by Jacobi-preconditioned CG.
pub fn solve_dirichlet(mesh: &Mesh, fixed: &[Option<f64>]) -> Result<Vec<f64>> {
    let n = mesh.node_count();
    if fixed.len() != n {
        return Err(Error::Parameter("Dirichlet data length differs from node count".into()));
    }
    if fixed.iter().all(Option::is_none) {
        return Err(Error::Parameter("Laplace solve needs at least one fixed node".into()));
    }
    let k = assemble_stiffness(mesh)?;
    let free: Vec<bool> = fixed.iter().map(Option::is_none).collect();
    let mut u: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();

    // rhs = -K_fd u_d restricted to free rows
    let mut ku = vec![0.0; n];
    k.mul(&u, &mut ku);
    let mut r: Vec<f64> = (0..n).map(|i| if free[i] { -ku[i] } else { 0.0 }).collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            (k.offsets[i]..k.offsets[i + 1])
                .find(|&j| k.cols[j] as usize == i)
                .map(|j| k.vals[j])
                .unwrap_or(1.0)
        })
        .collect();
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if free[i] && diag[i] > 0.0 { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let r0 = r.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let mut ap = vec![0.0; n];
    for _ in 0..20 * n.max(100) {
        if r.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-10 * r0 {
            break;
        }
        k.mul(&p, &mut ap);
        for i in 0..n {
            if !free[i] {
                ap[i] = 0.0;
            }
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(u)
}
