//! Idealized biventricular geometry.
//!
//! The LV is the shell between two confocal-free truncated ellipsoids
//! (endocardial radius `r`, long semi-axis `l`, epicardial both plus the wall
//! thickness), cut by the base plane `z = -base_truncation`; the apex points
//! to -z. It is meshed as a structured hexahedral grid in the parameters
//! (meridian fraction, azimuth, transmural fraction): a square patch mapped
//! onto the apex cap plus a ring grid up to the base. The RV free wall is a
//! thin shell lifted off the LV epicardium over the septal sector; its inner
//! layer is welded to the LV epicardium along the insertion strips.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::aha::{DEFAULT_ANTERIOR_JUNCTION, SEPTAL_SPAN};
use super::coords::{rotational_from_azimuth, Ventricle, VentricularCoords};
use super::mesh::{kuhn_split, Mesh, SurfaceTag, KUHN_MEAN_EDGE};

/// Shape parameters of the idealized biventricle (lengths in cm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WallParams {
    pub lv_endo_radius: f64,
    /// Long (z) semi-axis of the endocardial ellipsoid.
    pub lv_endo_length: f64,
    pub lv_wall_thickness: f64,
    /// Depth of the base plane below the ellipsoid equator.
    pub base_truncation: f64,
    /// Largest RV cavity width, measured along the LV epicardial normal.
    pub rv_bulge: f64,
    pub rv_wall_thickness: f64,
    /// Angular span of the RV attachment (radians), centred on the septum.
    pub rv_span: f64,
    /// Apicobasal coordinate where the RV attachment begins.
    pub rv_apex_ab: f64,
    /// Random displacement of interior nodes, as a fraction of one cell.
    pub jitter: f64,
}

impl Default for WallParams {
    fn default() -> Self {
        WallParams {
            lv_endo_radius: 2.0,
            lv_endo_length: 5.0,
            lv_wall_thickness: 1.0,
            base_truncation: 0.0,
            rv_bulge: 1.2,
            rv_wall_thickness: 0.4,
            rv_span: SEPTAL_SPAN,
            rv_apex_ab: 0.3,
            jitter: 0.15,
        }
    }
}

impl WallParams {
    pub fn check(&self, edge_target: f64) -> Result<()> {
        let positive = [
            ("lv_endo_radius", self.lv_endo_radius),
            ("lv_endo_length", self.lv_endo_length),
            ("rv_bulge", self.rv_bulge),
            ("rv_wall_thickness", self.rv_wall_thickness),
            ("rv_span", self.rv_span),
            ("edge_target", edge_target),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lv_wall_thickness > 2.0 * edge_target) {
            return Err(Error::Parameter(format!(
                "LV wall thickness {} must exceed twice the edge target {}",
                self.lv_wall_thickness, edge_target
            )));
        }
        if self.lv_wall_thickness >= self.lv_endo_radius {
            return Err(Error::Parameter(format!(
                "LV wall thickness {} must be below the endocardial radius {}",
                self.lv_wall_thickness, self.lv_endo_radius
            )));
        }
        if !(0.0..0.8 * self.lv_endo_length).contains(&self.base_truncation) {
            return Err(Error::Parameter("base truncation must lie in [0, 0.8 * endo length)".into()));
        }
        if !(0.05..0.9).contains(&self.rv_apex_ab) {
            return Err(Error::Parameter("rv_apex_ab must lie in [0.05, 0.9)".into()));
        }
        if self.rv_span >= PI {
            return Err(Error::Parameter("rv_span must be below pi".into()));
        }
        if !(0.0..0.3).contains(&self.jitter) {
            return Err(Error::Parameter("jitter must lie in [0, 0.3)".into()));
        }
        Ok(())
    }
}

/// Generates the annotated idealized biventricle.
///
/// The lattice spacing is tuned (two correction passes) so that the mean
/// edge length matches `edge_target`; counts depend only on the parameters,
/// the seed only moves interior nodes.
pub fn generate_idealized_biventricle(params: &WallParams, edge_target: f64, seed: u64) -> Result<Mesh> {
    params.check(edge_target)?;
    let mut spacing = edge_target / KUHN_MEAN_EDGE;
    let mut mesh = build(params, spacing, seed)?;
    for _ in 0..2 {
        let mean = mesh.mean_edge_length();
        spacing *= edge_target / mean;
        mesh = build(params, spacing, seed)?;
    }
    mesh.edge_target = edge_target;
    Ok(mesh)
}

/// Meridian shape: maps the normalized arc length along the mid-wall meridian
/// to the polar angle of the ellipsoid parameterization.
struct Meridian {
    table: Vec<f64>,
}

impl Meridian {
    fn new(r: f64, l: f64, mu_base: f64) -> Self {
        const N: usize = 4096;
        let speed = |mu: f64| (r * r * mu.cos().powi(2) + l * l * mu.sin().powi(2)).sqrt();
        let mut s = vec![0.0; N + 1];
        let h = mu_base / N as f64;
        for i in 0..N {
            let a = i as f64 * h;
            s[i + 1] = s[i] + 0.5 * h * (speed(a) + speed(a + h));
        }
        let total = s[N];
        // invert s(mu)/total on a uniform grid of the normalized arc length
        const M: usize = 1024;
        let mut table = vec![0.0; M + 1];
        let mut j = 0;
        for (k, out) in table.iter_mut().enumerate() {
            let target = k as f64 / M as f64 * total;
            while j + 1 < N && s[j + 1] < target {
                j += 1;
            }
            let seg = (s[j + 1] - s[j]).max(1e-300);
            let frac = ((target - s[j]) / seg).clamp(0.0, 1.0);
            *out = (j as f64 + frac) * h / mu_base;
        }
        table[M] = 1.0;
        Meridian { table }
    }

    /// Fraction of the base polar angle reached at normalized arc length `sigma`.
    fn angle_fraction(&self, sigma: f64) -> f64 {
        let m = (self.table.len() - 1) as f64;
        let x = sigma.clamp(0.0, 1.0) * m;
        let i = (x.floor() as usize).min(self.table.len() - 2);
        let f = x - i as f64;
        self.table[i] * (1.0 - f) + self.table[i + 1] * f
    }
}

fn mid_wall_arc_length(r: f64, l: f64, mu_base: f64) -> f64 {
    const N: usize = 4096;
    let h = mu_base / N as f64;
    (0..N)
        .map(|i| {
            let mu = (i as f64 + 0.5) * h;
            (r * r * mu.cos().powi(2) + l * l * mu.sin().powi(2)).sqrt() * h
        })
        .sum()
}

/// Elliptical square-to-disc map.
fn square_to_disc(u: f64, v: f64) -> (f64, f64) {
    (u * (1.0 - 0.5 * v * v).sqrt(), v * (1.0 - 0.5 * u * u).sqrt())
}

struct Shape<'a> {
    p: &'a WallParams,
    meridian: Meridian,
}

impl Shape<'_> {
    fn semi_axes(&self, t: f64) -> (f64, f64) {
        let h = self.p.lv_wall_thickness;
        (self.p.lv_endo_radius + t * h, self.p.lv_endo_length + t * h)
    }

    fn mu_base(&self, t: f64) -> f64 {
        let (_, l) = self.semi_axes(t);
        (self.p.base_truncation / l).acos()
    }

    /// LV point at meridian fraction `sigma`, azimuth `phi`, transmural fraction `t` (0 endo).
    fn lv_point(&self, sigma: f64, phi: f64, t: f64) -> [f64; 3] {
        let (r, l) = self.semi_axes(t);
        let mu = self.mu_base(t) * self.meridian.angle_fraction(sigma);
        [r * mu.sin() * phi.cos(), r * mu.sin() * phi.sin(), -l * mu.cos()]
    }

    fn epi_normal(&self, sigma: f64, phi: f64) -> [f64; 3] {
        let (r, l) = self.semi_axes(1.0);
        let p = self.lv_point(sigma, phi, 1.0);
        let n = [p[0] / (r * r), p[1] / (r * r), p[2] / (l * l)];
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        [n[0] / len, n[1] / len, n[2] / len]
    }
}

/// Per-node parameter record used for coordinates and surface classification.
#[derive(Clone, Copy)]
struct NodeInfo {
    sigma: f64,
    phi: f64,
    tm: f64,
    tv: Ventricle,
    /// Lattice layer: LV 0..=k_lv (0 endo), RV 0..=l_rv (0 cavity side).
    layer: usize,
    base: bool,
    /// LV epicardial node with a positive RV cavity offset above it.
    under_cavity: bool,
}

fn build(p: &WallParams, spacing: f64, seed: u64) -> Result<Mesh> {
    let a = spacing;
    let t_mid = 0.5;
    let r_mid = p.lv_endo_radius + t_mid * p.lv_wall_thickness;
    let l_mid = p.lv_endo_length + t_mid * p.lv_wall_thickness;
    let mu_base_mid = (p.base_truncation / l_mid).acos();
    let shape = Shape { p, meridian: Meridian::new(r_mid, l_mid, mu_base_mid) };

    let s_total = mid_wall_arc_length(r_mid, l_mid, mu_base_mid);
    let circumference = TAU * r_mid * mu_base_mid.sin();
    let k_lv = ((p.lv_wall_thickness / a).round() as usize).max(2);
    let nc = ((circumference / (16.0 * a)).round() as usize).max(1) * 2;
    let np = 8 * nc;
    let sigma_cap = (nc as f64 * a / s_total).min(0.4);
    let m_ring = (((1.0 - sigma_cap) * s_total / a).round() as usize).max(4);
    let l_rv = ((p.rv_wall_thickness / a).round() as usize).max(2);

    let ncf = nc as f64;
    let ni = nc as i64;
    // perimeter walk: index p -> cap boundary lattice node, counter-clockwise from (nc, 0)
    let perimeter = |q: usize| -> (i64, i64) {
        let q = q as i64;
        let n = ni;
        if q <= n {
            (n, q)
        } else if q <= 3 * n {
            (n - (q - n), n)
        } else if q <= 5 * n {
            (-n, n - (q - 3 * n))
        } else if q <= 7 * n {
            (-n + (q - 5 * n), -n)
        } else {
            (n, -n + (q - 7 * n))
        }
    };
    let perim_angle: Vec<f64> = (0..np)
        .map(|q| {
            let (i, j) = perimeter(q);
            let (x, y) = square_to_disc(i as f64 / ncf, j as f64 / ncf);
            y.atan2(x).rem_euclid(TAU)
        })
        .collect();
    // continuous azimuth along the perimeter index (monotone, unwrapped)
    let azimuth_at = |pc: f64| -> f64 {
        let pc = pc.rem_euclid(np as f64);
        let i = (pc.floor() as usize).min(np - 1);
        let f = pc - i as f64;
        let a0 = perim_angle[i];
        let mut a1 = perim_angle[(i + 1) % np];
        if a1 < a0 {
            a1 += TAU;
        }
        a0 + f * (a1 - a0)
    };

    // RV patch: perimeter indices q in [p0, p0 + span_q], rings m in [m0, m_ring]
    let septum = -FRAC_PI_2;
    let start = (septum - p.rv_span / 2.0).rem_euclid(TAU);
    let p0 = (0..np)
        .min_by(|&x, &y| {
            let dx = angle_gap(perim_angle[x], start);
            let dy = angle_gap(perim_angle[y], start);
            dx.total_cmp(&dy)
        })
        .unwrap();
    let span_q = ((p.rv_span / TAU) * np as f64).round() as usize;
    if span_q < 8 {
        return Err(Error::Parameter("RV span too narrow for the mesh resolution".into()));
    }
    let sigma_of_ring = |m: f64| sigma_cap + (m / m_ring as f64) * (1.0 - sigma_cap);
    let m0 = (((p.rv_apex_ab - sigma_cap) / (1.0 - sigma_cap) * m_ring as f64).ceil().max(1.0)) as usize;
    if m0 + 6 > m_ring {
        return Err(Error::Parameter("RV attachment starts too close to the base".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<[f64; 3]> = Vec::new();
    let mut info: Vec<NodeInfo> = Vec::new();
    // jittered lattice parameters per node, for recomputation when a tet inverts
    let mut jitter: Vec<Option<[f64; 3]>> = Vec::new();

    let side = 2 * nc + 1;
    let cap_id = |i: i64, j: i64, k: usize| -> usize {
        (k * side + (j + ni) as usize) * side + (i + ni) as usize
    };
    let cap_count = side * side * (k_lv + 1);
    let ring_id = |q: usize, m: usize, k: usize| -> usize {
        if m == 0 {
            let (i, j) = perimeter(q % np);
            cap_id(i, j, k)
        } else {
            cap_count + ((k * m_ring + (m - 1)) * np) + (q % np)
        }
    };

    let cap_param = |i: f64, j: f64| -> (f64, f64) {
        let (x, y) = square_to_disc(i / ncf, j / ncf);
        let rho = (x * x + y * y).sqrt().min(1.0);
        let phi = if rho < 1e-14 { 0.0 } else { y.atan2(x) };
        (sigma_cap * rho, phi)
    };

    let rv_offsets = |qf: f64, mf: f64| -> (f64, f64) {
        // (cavity offset, wall thickness) at patch position (q from p0, ring m)
        let dq = qf.min(span_q as f64 - qf);
        let dm = mf - m0 as f64;
        let taper = (dq / 2.0).clamp(0.0, 1.0) * (dm / 2.0).clamp(0.0, 1.0);
        let x = (qf - 2.0) / (span_q as f64 - 4.0);
        let y = (mf - m0 as f64 - 2.0) / (m_ring as f64 - m0 as f64 - 2.0);
        let bump = if x > 0.0 && x < 1.0 { (PI * x).sin() } else { 0.0 };
        let ramp = if y > 0.0 { (FRAC_PI_2 * y.min(1.0)).sin() } else { 0.0 };
        (p.rv_bulge * bump * ramp, p.rv_wall_thickness * taper)
    };
    let in_patch = |q: usize| -> Option<usize> {
        let d = (q + np - p0) % np;
        (d <= span_q).then_some(d)
    };
    let cavity_at = |q: usize, m: usize| -> bool {
        match in_patch(q) {
            Some(d) => d > 2 && d + 2 < span_q && m > m0 + 2,
            None => false,
        }
    };

    let jit = |rng: &mut ChaCha8Rng, interior: bool| -> Option<[f64; 3]> {
        if interior && p.jitter > 0.0 {
            Some([0, 1, 2].map(|_| rng.random_range(-p.jitter..=p.jitter)))
        } else {
            // draw anyway so the stream does not depend on which nodes are interior
            let _ = [0, 1, 2].map(|_| rng.random_range(-1.0..=1.0f64));
            None
        }
    };

    // LV cap nodes
    for k in 0..=k_lv {
        for j in -ni..=ni {
            for i in -ni..=ni {
                let interior = k > 0 && k < k_lv && i.abs() < ni && j.abs() < ni;
                let d = jit(&mut rng, interior).unwrap_or([0.0; 3]);
                let (sigma, phi) = cap_param(i as f64 + d[0], j as f64 + d[1]);
                let t = (k as f64 + d[2]) / k_lv as f64;
                nodes.push(shape.lv_point(sigma, phi, t));
                info.push(NodeInfo {
                    sigma,
                    phi,
                    tm: 1.0 - t,
                    tv: Ventricle::Lv,
                    layer: k,
                    base: false,
                    under_cavity: false,
                });
                jitter.push(interior.then_some(d));
            }
        }
    }
    debug_assert_eq!(nodes.len(), cap_count);
    // LV ring nodes
    for k in 0..=k_lv {
        for m in 1..=m_ring {
            for q in 0..np {
                let interior = k > 0 && k < k_lv && m < m_ring;
                let d = jit(&mut rng, interior).unwrap_or([0.0; 3]);
                let sigma = if m == m_ring { 1.0 } else { sigma_of_ring(m as f64 + d[1]) };
                let phi = azimuth_at(q as f64 + d[0]);
                let t = (k as f64 + d[2]) / k_lv as f64;
                nodes.push(shape.lv_point(sigma, phi, t));
                info.push(NodeInfo {
                    sigma,
                    phi,
                    tm: 1.0 - t,
                    tv: Ventricle::Lv,
                    layer: k,
                    base: m == m_ring,
                    under_cavity: k == k_lv && cavity_at(q, m),
                });
                jitter.push(interior.then_some(d));
            }
        }
    }
    // RV nodes; zero-offset nodes are welded onto the LV epicardium
    let rv_cols = span_q + 1;
    let rv_rows = m_ring - m0 + 1;
    let mut rv_id = vec![0usize; rv_cols * rv_rows * (l_rv + 1)];
    let rv_index = |d: usize, m: usize, l: usize| (l * rv_rows + (m - m0)) * rv_cols + d;
    for l in 0..=l_rv {
        for m in m0..=m_ring {
            for d in 0..=span_q {
                let q = (p0 + d) % np;
                let welded_wall = d == 0 || d == span_q || m == m0;
                let welded_cavity = !(d > 2 && d + 2 < span_q && m > m0 + 2);
                if welded_cavity && (l == 0 || welded_wall) {
                    rv_id[rv_index(d, m, l)] = ring_id(q, m, k_lv);
                    continue;
                }
                let sigma = if m == m_ring { 1.0 } else { sigma_of_ring(m as f64) };
                let phi = azimuth_at(q as f64);
                let (cav, wall) = rv_offsets(d as f64, m as f64);
                let off = cav + wall * l as f64 / l_rv as f64;
                let base = shape.lv_point(sigma, phi, 1.0);
                let n = shape.epi_normal(sigma, phi);
                rv_id[rv_index(d, m, l)] = nodes.len();
                nodes.push([base[0] + off * n[0], base[1] + off * n[1], base[2] + off * n[2]]);
                info.push(NodeInfo {
                    sigma,
                    phi,
                    tm: 1.0 - l as f64 / l_rv as f64,
                    tv: Ventricle::Rv,
                    layer: l,
                    base: m == m_ring,
                    under_cavity: false,
                });
                jitter.push(None);
            }
        }
    }

    // cells
    let mut tets: Vec<[u32; 4]> = Vec::new();
    let mut owner: Vec<Ventricle> = Vec::new();
    let mut push_cell = |corners: [usize; 8], cell: [i64; 3], tv: Ventricle, tets: &mut Vec<[u32; 4]>| {
        let c = corners.map(|x| x as u32);
        let before = tets.len();
        kuhn_split(&c, cell, tets);
        owner.extend(std::iter::repeat(tv).take(tets.len() - before));
    };
    for k in 0..k_lv {
        for j in -ni..ni {
            for i in -ni..ni {
                let mut c = [0usize; 8];
                for (bits, x) in c.iter_mut().enumerate() {
                    *x = cap_id(i + (bits & 1) as i64, j + ((bits >> 1) & 1) as i64, k + (bits >> 2));
                }
                push_cell(c, [i, j, k as i64], Ventricle::Lv, &mut tets);
            }
        }
        for m in 0..m_ring {
            for q in 0..np {
                let mut c = [0usize; 8];
                for (bits, x) in c.iter_mut().enumerate() {
                    *x = ring_id(q + (bits & 1), m + ((bits >> 1) & 1), k + (bits >> 2));
                }
                push_cell(c, [q as i64, m as i64, k as i64], Ventricle::Lv, &mut tets);
            }
        }
    }
    for l in 0..l_rv {
        for m in m0..m_ring {
            for d in 0..span_q {
                let mut c = [0usize; 8];
                for (bits, x) in c.iter_mut().enumerate() {
                    *x = rv_id[rv_index(d + (bits & 1), m + ((bits >> 1) & 1), l + (bits >> 2))];
                }
                let q = (p0 + d) as i64;
                push_cell(c, [q, m as i64, l as i64], Ventricle::Rv, &mut tets);
            }
        }
    }
    drop(push_cell);

    // drop cells squashed to zero volume by welding
    let mut mesh = Mesh::new(nodes, tets, a * KUHN_MEAN_EDGE);
    let scale = a * a * a;
    let keep: Vec<bool> =
        (0..mesh.tet_count()).map(|t| mesh.signed_volume(t).abs() > 1e-9 * scale).collect();
    let mut it = keep.iter();
    mesh.tets.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    owner.retain(|_| *it.next().unwrap());

    // orientation is fixed on the unjittered lattice, then inverted tets lose their jitter
    let jittered_nodes = mesh.nodes.clone();
    let mut plain = mesh.nodes.clone();
    let mut plain_info = info.clone();
    for (n, j) in jitter.iter().enumerate() {
        if j.is_some() {
            let (pt, inf) = relocate(&shape, &info[n], n, cap_count, side, ni, k_lv, m_ring, np, &cap_param, &sigma_of_ring, &azimuth_at, [0.0; 3]);
            plain[n] = pt;
            plain_info[n] = inf;
        }
    }
    mesh.nodes = plain.clone();
    mesh.orient_positive();
    mesh.nodes = jittered_nodes;
    for _ in 0..20 {
        let bad: Vec<usize> = (0..mesh.tet_count())
            .filter(|&t| mesh.signed_volume(t) <= 0.05 * scale / 6.0)
            .collect();
        if bad.is_empty() {
            break;
        }
        for t in bad {
            for &n in &mesh.tets[t] {
                let n = n as usize;
                if jitter[n].take().is_some() {
                    mesh.nodes[n] = plain[n];
                    info[n] = plain_info[n];
                }
            }
        }
    }

    // surfaces
    let mut surface = vec![SurfaceTag::NONE; mesh.node_count()];
    for (face, t) in mesh.boundary_faces() {
        let nodes3 = face.map(|v| info[v as usize]);
        let class = if nodes3.iter().all(|n| n.base) {
            SurfaceTag::BASE
        } else if owner[t as usize] == Ventricle::Lv {
            if nodes3.iter().all(|n| n.layer == 0) {
                SurfaceTag::LV_ENDO
            } else if nodes3.iter().all(|n| n.layer == k_lv) {
                if nodes3.iter().any(|n| n.under_cavity) {
                    SurfaceTag::RV_SEPTUM
                } else {
                    SurfaceTag::EPI
                }
            } else {
                return Err(Error::Topology(format!("unclassifiable LV boundary face {face:?}")));
            }
        } else {
            let rv: Vec<&NodeInfo> = nodes3.iter().filter(|n| n.tv == Ventricle::Rv).collect();
            if rv.is_empty() {
                if nodes3.iter().any(|n| n.under_cavity) {
                    SurfaceTag::RV_SEPTUM
                } else {
                    SurfaceTag::EPI
                }
            } else if rv.iter().all(|n| n.layer == 0) {
                SurfaceTag::RV_ENDO
            } else if rv.iter().all(|n| n.layer == l_rv) {
                SurfaceTag::EPI
            } else {
                return Err(Error::Topology(format!("unclassifiable RV boundary face {face:?}")));
            }
        };
        for v in face {
            surface[v as usize] |= class;
        }
    }
    mesh.surface = surface;

    let coords = VentricularCoords {
        tm: info.iter().map(|n| n.tm.clamp(0.0, 1.0)).collect(),
        ab: info.iter().map(|n| n.sigma.clamp(0.0, 1.0)).collect(),
        rt: info.iter().map(|n| rotational_from_azimuth(n.phi, DEFAULT_ANTERIOR_JUNCTION)).collect(),
        tv: info.iter().map(|n| n.tv).collect(),
    };
    mesh.analytic_coords = Some(coords);
    mesh.validate()?;
    Ok(mesh)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Recomputes an LV lattice node at a given jitter offset.
#[allow(clippy::too_many_arguments)]
fn relocate(
    shape: &Shape<'_>,
    info: &NodeInfo,
    n: usize,
    cap_count: usize,
    side: usize,
    ni: i64,
    k_lv: usize,
    m_ring: usize,
    np: usize,
    cap_param: &dyn Fn(f64, f64) -> (f64, f64),
    sigma_of_ring: &dyn Fn(f64) -> f64,
    azimuth_at: &dyn Fn(f64) -> f64,
    d: [f64; 3],
) -> ([f64; 3], NodeInfo) {
    let (sigma, phi, k) = if n < cap_count {
        let i = (n % side) as i64 - ni;
        let j = ((n / side) % side) as i64 - ni;
        let k = n / (side * side);
        let (s, ph) = cap_param(i as f64 + d[0], j as f64 + d[1]);
        (s, ph, k)
    } else {
        let r = n - cap_count;
        let q = r % np;
        let m = (r / np) % m_ring + 1;
        let k = r / (np * m_ring);
        (sigma_of_ring(m as f64 + d[1]), azimuth_at(q as f64 + d[0]), k)
    };
    let t = (k as f64 + d[2]) / k_lv as f64;
    let mut out = *info;
    out.sigma = sigma;
    out.phi = phi;
    out.tm = 1.0 - t;
    (shape.lv_point(sigma, phi, t), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> Mesh {
        generate_idealized_biventricle(&WallParams::default(), 0.4, 1).unwrap()
    }

    #[test]
    fn coarse_mesh_is_valid() {
        let mesh = coarse();
        mesh.validate().unwrap();
        let mean = mesh.mean_edge_length();
        assert!((mean - 0.4).abs() < 0.3 * 0.4, "mean edge {mean}");
        let c = mesh.analytic_coords.as_ref().unwrap();
        c.check_bounds().unwrap();
        assert!(c.tv.iter().any(|&v| v == Ventricle::Rv));
    }

    #[test]
    fn zero_thickness_rejected() {
        let p = WallParams { lv_wall_thickness: 0.0, ..Default::default() };
        assert!(matches!(generate_idealized_biventricle(&p, 0.15, 1), Err(Error::Parameter(_))));
        let p = WallParams { lv_wall_thickness: 2.5, ..Default::default() };
        assert!(matches!(generate_idealized_biventricle(&p, 0.15, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn deterministic_for_seed() {
        let a = coarse();
        let b = coarse();
        assert_eq!(a, b);
        let c = generate_idealized_biventricle(&WallParams::default(), 0.4, 2).unwrap();
        assert_eq!(a.node_count(), c.node_count());
        assert_eq!(a.tets, c.tets);
        assert_ne!(a.nodes, c.nodes);
    }

    #[test]
    fn surfaces_carry_exact_transmural_values() {
        let mesh = coarse();
        let c = mesh.analytic_coords.as_ref().unwrap();
        let mut endo = 0;
        let mut epi = 0;
        for (i, tag) in mesh.surface.iter().enumerate() {
            if tag.is_pure_endo() {
                assert_eq!(c.tm[i], 1.0);
                endo += 1;
            }
            if tag.is_pure_epi() {
                assert_eq!(c.tm[i], 0.0);
                epi += 1;
            }
        }
        assert!(endo > 0 && epi > 0);
        assert!(mesh.surface.iter().any(|t| t.contains(SurfaceTag::RV_SEPTUM)));
        assert!(mesh.surface.iter().any(|t| t.contains(SurfaceTag::RV_ENDO)));
    }
}
