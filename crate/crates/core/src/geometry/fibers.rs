use log::warn;
use nalgebra::Vector3;

use crate::error::{Error, Result};

use super::coords::VentricularCoords;
use super::mesh::Mesh;

/// Orthonormal fiber/sheet/normal triad of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triad {
    pub f: Vector3<f64>,
    pub s: Vector3<f64>,
    pub n: Vector3<f64>,
}

impl Triad {
    pub fn identity() -> Self {
        Triad { f: Vector3::x(), s: Vector3::y(), n: Vector3::z() }
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let unit = |v: &Vector3<f64>| (v.norm() - 1.0).abs() <= tol;
        unit(&self.f)
            && unit(&self.s)
            && unit(&self.n)
            && self.f.dot(&self.s).abs() <= tol
            && self.f.dot(&self.n).abs() <= tol
            && self.s.dot(&self.n).abs() <= tol
    }

    /// det([f s n]); +1 for a right-handed frame.
    pub fn determinant(&self) -> f64 {
        self.f.dot(&self.s.cross(&self.n))
    }

    pub fn to_array(&self) -> [f64; 9] {
        [self.f.x, self.f.y, self.f.z, self.s.x, self.s.y, self.s.z, self.n.x, self.n.y, self.n.z]
    }

    pub fn from_array(a: &[f64]) -> Self {
        Triad {
            f: Vector3::new(a[0], a[1], a[2]),
            s: Vector3::new(a[3], a[4], a[5]),
            n: Vector3::new(a[6], a[7], a[8]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberField {
    pub triads: Vec<Triad>,
    /// Elements whose local frame was singular and got a neighbour-averaged triad.
    pub fallback: Vec<usize>,
}

/// Local (circumferential, longitudinal, radial) frame of element `t` from
/// the gradients of the transmural and apicobasal fields. `None` when the
/// frame is singular (apex, or coordinate gradients parallel).
pub fn local_frame(mesh: &Mesh, coords: &VentricularCoords, t: usize) -> Option<[Vector3<f64>; 3]> {
    let g = mesh.basis_gradients(t)?;
    let tet = mesh.tets[t];
    let grad = |field: &[f64]| -> Vector3<f64> { (0..4).map(|a| g[a] * field[tet[a] as usize]).sum() };
    let gtm = grad(&coords.tm);
    let gab = grad(&coords.ab);
    let scale = 1.0 / mesh.edge_target.max(1e-12);
    if gtm.norm() < 1e-6 * scale {
        return None;
    }
    let radial = -gtm.normalize();
    let long = gab - radial * gab.dot(&radial);
    if long.norm() < 1e-6 * scale {
        return None;
    }
    let long = long.normalize();
    let circ = long.cross(&radial);
    Some([circ, long, radial])
}

/// Helix angle of `f` within a local frame, in degrees.
pub fn helix_angle(f: &Vector3<f64>, frame: &[Vector3<f64>; 3]) -> f64 {
    f.dot(&frame[1]).atan2(f.dot(&frame[0])).to_degrees()
}

/// Rule-based fibers: the helix angle varies linearly in `tm` from
/// `alpha_epi` (tm = 0) to `alpha_endo` (tm = 1); sheets are transmural.
pub fn assign_fibers(
    mesh: &Mesh,
    coords: &VentricularCoords,
    alpha_endo: f64,
    alpha_epi: f64,
) -> Result<FiberField> {
    if coords.len() != mesh.node_count() {
        return Err(Error::Parameter("coordinates do not match the mesh".into()));
    }
    let mut triads = Vec::with_capacity(mesh.tet_count());
    let mut missing = Vec::new();
    for t in 0..mesh.tet_count() {
        match local_frame(mesh, coords, t) {
            Some([circ, long, radial]) => {
                let tm = mesh.tets[t].iter().map(|&v| coords.tm[v as usize]).sum::<f64>() / 4.0;
                let alpha = (alpha_endo * tm + alpha_epi * (1.0 - tm)).to_radians();
                let f = circ * alpha.cos() + long * alpha.sin();
                let s = radial;
                let n = f.cross(&s);
                triads.push(Triad { f, s, n });
            }
            None => {
                triads.push(Triad::identity());
                missing.push(t);
            }
        }
    }
    if !missing.is_empty() {
        warn!("{} elements with a singular local frame; using neighbour-averaged fibers", missing.len());
        fill_from_neighbors(mesh, &mut triads, &missing);
    }
    Ok(FiberField { triads, fallback: missing })
}

fn fill_from_neighbors(mesh: &Mesh, triads: &mut [Triad], missing: &[usize]) {
    let node_tets = mesh.node_tets();
    let mut pending: Vec<usize> = missing.to_vec();
    let mut resolved = vec![true; triads.len()];
    for &t in missing {
        resolved[t] = false;
    }
    while !pending.is_empty() {
        let mut next = Vec::new();
        let mut updates = Vec::new();
        for &t in &pending {
            let mut f = Vector3::zeros();
            let mut s = Vector3::zeros();
            for &v in &mesh.tets[t] {
                for &nb in node_tets.of(v as usize) {
                    let nb = nb as usize;
                    if resolved[nb] {
                        // align signs before averaging
                        let tf = triads[nb].f;
                        let ts = triads[nb].s;
                        f += if f.dot(&tf) < 0.0 { -tf } else { tf };
                        s += if s.dot(&ts) < 0.0 { -ts } else { ts };
                    }
                }
            }
            if f.norm() < 1e-12 || s.norm() < 1e-12 {
                next.push(t);
                continue;
            }
            let f = f.normalize();
            let s = s - f * s.dot(&f);
            let s = if s.norm() < 1e-12 { f.cross(&Vector3::z()).normalize() } else { s.normalize() };
            updates.push((t, Triad { f, s, n: f.cross(&s) }));
        }
        if updates.is_empty() {
            // isolated singular elements keep the identity triad
            break;
        }
        for (t, tr) in updates {
            triads[t] = tr;
            resolved[t] = true;
        }
        pending = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate::{generate_idealized_biventricle, WallParams};

    #[test]
    fn triads_are_right_handed_orthonormal() {
        let mesh = generate_idealized_biventricle(&WallParams::default(), 0.4, 3).unwrap();
        let c = mesh.analytic_coords.clone().unwrap();
        let fib = assign_fibers(&mesh, &c, 60.0, -60.0).unwrap();
        for tr in &fib.triads {
            assert!(tr.is_orthonormal(1e-6));
            assert!((tr.determinant() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn helix_angle_follows_transmural_rule() {
        let mesh = generate_idealized_biventricle(&WallParams::default(), 0.4, 3).unwrap();
        let c = mesh.analytic_coords.clone().unwrap();
        let fib = assign_fibers(&mesh, &c, 60.0, -60.0).unwrap();
        let mut best = (0usize, -1.0);
        for t in 0..mesh.tet_count() {
            if fib.fallback.contains(&t) {
                continue;
            }
            let frame = local_frame(&mesh, &c, t).unwrap();
            let tm = mesh.tets[t].iter().map(|&v| c.tm[v as usize]).sum::<f64>() / 4.0;
            let expect = 60.0 * tm - 60.0 * (1.0 - tm);
            let got = helix_angle(&fib.triads[t].f, &frame);
            assert!((got - expect).abs() < 2.0, "tet {t}: {got} vs {expect}");
            if tm > best.1 {
                best = (t, tm);
            }
        }
        // the most endocardial element sits close to alpha_endo
        let frame = local_frame(&mesh, &c, best.0).unwrap();
        let got = helix_angle(&fib.triads[best.0].f, &frame);
        assert!((got - 60.0 * best.1 + 60.0 * (1.0 - best.1)).abs() < 2.0);
    }

    #[test]
    fn zero_helix_gives_circumferential_fibers() {
        let mesh = generate_idealized_biventricle(&WallParams::default(), 0.4, 3).unwrap();
        let c = mesh.analytic_coords.clone().unwrap();
        let fib = assign_fibers(&mesh, &c, 0.0, 0.0).unwrap();
        for t in 0..mesh.tet_count() {
            if let Some(frame) = local_frame(&mesh, &c, t) {
                assert!((fib.triads[t].f - frame[0]).norm() < 1e-12);
            }
        }
    }
}
