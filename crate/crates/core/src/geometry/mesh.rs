use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

use super::coords::VentricularCoords;

pub type Point = [f64; 3];

/// Per-node surface membership, as a bit set of the `SurfaceTag` constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SurfaceTag(pub u8);

impl SurfaceTag {
    pub const NONE: SurfaceTag = SurfaceTag(0);
    pub const LV_ENDO: SurfaceTag = SurfaceTag(1);
    pub const RV_ENDO: SurfaceTag = SurfaceTag(2);
    pub const EPI: SurfaceTag = SurfaceTag(4);
    pub const BASE: SurfaceTag = SurfaceTag(8);
    /// LV epicardium facing the RV cavity. Counted as epicardial for the
    /// LV-centric transmural coordinate.
    pub const RV_SEPTUM: SurfaceTag = SurfaceTag(16);

    pub const ENDO: SurfaceTag = SurfaceTag(1 | 2);
    pub const OUTER: SurfaceTag = SurfaceTag(4 | 16);

    pub fn contains(self, other: SurfaceTag) -> bool {
        self.0 & other.0 == other.0 && other.0 != 0
    }

    pub fn intersects(self, other: SurfaceTag) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Lies on the endocardium and on no epicardial surface.
    pub fn is_pure_endo(self) -> bool {
        self.intersects(Self::ENDO) && !self.intersects(Self::OUTER)
    }

    /// Lies on an epicardial surface and on no endocardium.
    pub fn is_pure_epi(self) -> bool {
        self.intersects(Self::OUTER) && !self.intersects(Self::ENDO)
    }
}

impl std::ops::BitOr for SurfaceTag {
    type Output = SurfaceTag;
    fn bitor(self, rhs: SurfaceTag) -> SurfaceTag {
        SurfaceTag(self.0 | rhs.0)
    }
}

impl std::ops::BitOrAssign for SurfaceTag {
    fn bitor_assign(&mut self, rhs: SurfaceTag) {
        self.0 |= rhs.0;
    }
}

/// Tetrahedral mesh with positions in cm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub tets: Vec<[u32; 4]>,
    pub edge_target: f64,
    /// Per-node surface tags; empty when the mesh carries no surface labels.
    pub surface: Vec<SurfaceTag>,
    /// Exact ventricular coordinates known from the generator, if any.
    pub analytic_coords: Option<VentricularCoords>,
}

impl Mesh {
    pub fn new(nodes: Vec<Point>, tets: Vec<[u32; 4]>, edge_target: f64) -> Self {
        Mesh { nodes, tets, edge_target, surface: Vec::new(), analytic_coords: None }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_points(&self, t: usize) -> [Vector3<f64>; 4] {
        let tet = self.tets[t];
        tet.map(|i| Vector3::from(self.nodes[i as usize]))
    }

    pub fn signed_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(t);
        signed_volume(&a, &b, &c, &d)
    }

    pub fn centroid(&self, t: usize) -> Vector3<f64> {
        let p = self.tet_points(t);
        (p[0] + p[1] + p[2] + p[3]) / 4.0
    }

    /// Gradients of the four linear basis functions of tet `t`.
    pub fn basis_gradients(&self, t: usize) -> Option<[Vector3<f64>; 4]> {
        let [a, b, c, d] = self.tet_points(t);
        basis_gradients(&a, &b, &c, &d)
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut edges = Vec::with_capacity(self.tets.len() * 6);
        for tet in &self.tets {
            for a in 0..4 {
                for b in a + 1..4 {
                    let (i, j) = (tet[a], tet[b]);
                    edges.push(if i < j { (i, j) } else { (j, i) });
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.edges();
        if edges.is_empty() {
            return 0.0;
        }
        let total: f64 = edges
            .iter()
            .map(|&(i, j)| distance(&self.nodes[i as usize], &self.nodes[j as usize]))
            .sum();
        total / edges.len() as f64
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(i, j)| distance(&self.nodes[i as usize], &self.nodes[j as usize]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.nodes {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Tets incident to each node, in CSR form.
    pub fn node_tets(&self) -> Adjacency {
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(self.tets.len() * 4);
        for (t, tet) in self.tets.iter().enumerate() {
            for &n in tet {
                pairs.push((n, t as u32));
            }
        }
        Adjacency::from_pairs(self.nodes.len(), pairs)
    }

    /// Edge-connected neighbours of each node, in CSR form.
    pub fn node_neighbors(&self) -> Adjacency {
        let mut pairs = Vec::new();
        for (i, j) in self.edges() {
            pairs.push((i, j));
            pairs.push((j, i));
        }
        Adjacency::from_pairs(self.nodes.len(), pairs)
    }

    /// Boundary faces as (sorted node triple, owning tet).
    pub fn boundary_faces(&self) -> Vec<([u32; 3], u32)> {
        let mut count: HashMap<[u32; 3], (u32, u32)> = HashMap::with_capacity(self.tets.len() * 2);
        for (t, tet) in self.tets.iter().enumerate() {
            for skip in 0..4 {
                let mut f = [0u32; 3];
                let mut k = 0;
                for (a, &n) in tet.iter().enumerate() {
                    if a != skip {
                        f[k] = n;
                        k += 1;
                    }
                }
                f.sort_unstable();
                let e = count.entry(f).or_insert((0, t as u32));
                e.0 += 1;
            }
        }
        let mut faces: Vec<([u32; 3], u32)> =
            count.into_iter().filter(|(_, (c, _))| *c == 1).map(|(f, (_, t))| (f, t)).collect();
        faces.sort_unstable();
        faces
    }

    /// Flips node order of negatively oriented tets so every signed volume is positive.
    pub fn orient_positive(&mut self) {
        for t in 0..self.tets.len() {
            if self.signed_volume(t) < 0.0 {
                self.tets[t].swap(2, 3);
            }
        }
    }

    /// Checks index bounds, degenerate/inverted tets and per-node array lengths.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len() as u32;
        for (t, tet) in self.tets.iter().enumerate() {
            if tet.iter().any(|&i| i >= n) {
                return Err(Error::Topology(format!("tet {t} references a node out of range")));
            }
            let v = self.signed_volume(t);
            if !(v > 0.0) {
                return Err(Error::Topology(format!("tet {t} has non-positive volume {v:e}")));
            }
        }
        if !self.surface.is_empty() && self.surface.len() != self.nodes.len() {
            return Err(Error::Topology("surface tag count differs from node count".into()));
        }
        if let Some(c) = &self.analytic_coords {
            if c.len() != self.nodes.len() {
                return Err(Error::Topology("coordinate count differs from node count".into()));
            }
        }
        Ok(())
    }

    /// Structured box of Kuhn-split cubes, `cells` per axis, origin at `origin`.
    pub fn structured_box(origin: Point, cells: [usize; 3], spacing: f64) -> Mesh {
        let [nx, ny, nz] = cells;
        let idx = |i: usize, j: usize, k: usize| ((k * (ny + 1) + j) * (nx + 1) + i) as u32;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    nodes.push([
                        origin[0] + i as f64 * spacing,
                        origin[1] + j as f64 * spacing,
                        origin[2] + k as f64 * spacing,
                    ]);
                }
            }
        }
        let mut tets = Vec::with_capacity(nx * ny * nz * 6);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let mut corners = [0u32; 8];
                    for (bits, c) in corners.iter_mut().enumerate() {
                        *c = idx(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                    }
                    kuhn_split(&corners, [i as i64, j as i64, k as i64], &mut tets);
                }
            }
        }
        let mut mesh = Mesh::new(nodes, tets, spacing * KUHN_MEAN_EDGE);
        mesh.orient_positive();
        mesh
    }

    /// Box of size `extent` (cm) whose mean edge length is close to `edge_target`.
    pub fn box_with_edge(extent: Point, edge_target: f64) -> Mesh {
        let spacing = edge_target / KUHN_MEAN_EDGE;
        let cells = extent.map(|e| ((e / spacing).round() as usize).max(1));
        let s = [0, 1, 2].map(|k| extent[k] / cells[k] as f64);
        // use the per-axis spacing by scaling a unit lattice
        let mut mesh = Mesh::structured_box([0.0; 3], cells, 1.0);
        for p in &mut mesh.nodes {
            for k in 0..3 {
                p[k] *= s[k];
            }
        }
        mesh.edge_target = edge_target;
        mesh
    }
}

/// Mean edge length of the Kuhn lattice relative to the cube spacing:
/// three axis edges, three face diagonals and one body diagonal per node.
pub const KUHN_MEAN_EDGE: f64 = (3.0 + 3.0 * std::f64::consts::SQRT_2 + 1.732_050_807_568_877_2) / 7.0;

/// Splits a hexahedral cell into six tets sharing one body diagonal.
///
/// `corners` is indexed by `dx | dy << 1 | dz << 2`. The pattern is mirrored
/// along each axis with odd cell index so that every face diagonal passes
/// through the lattice node whose indices are all even; neighbouring cells
/// therefore always agree on their shared face diagonals.
pub(crate) fn kuhn_split(corners: &[u32; 8], cell: [i64; 3], out: &mut Vec<[u32; 4]>) {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let flip = (cell[0].rem_euclid(2) | (cell[1].rem_euclid(2) << 1) | (cell[2].rem_euclid(2) << 2)) as usize;
    for perm in PERMS {
        let mut bits = 0usize;
        let mut tet = [corners[flip]; 4];
        for (s, axis) in perm.iter().enumerate() {
            bits |= 1 << axis;
            tet[s + 1] = corners[bits ^ flip];
        }
        if tet[0] != tet[1] && tet[0] != tet[2] && tet[0] != tet[3] && tet[1] != tet[2] && tet[1] != tet[3] && tet[2] != tet[3] {
            out.push(tet);
        }
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    distance_sq(a, b).sqrt()
}

pub fn distance_sq(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

pub fn signed_volume(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, d: &Vector3<f64>) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

pub fn basis_gradients(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
    d: &Vector3<f64>,
) -> Option<[Vector3<f64>; 4]> {
    // rows of J^-T give gradients of the barycentric coordinates 1..3
    let jac = Matrix3::from_columns(&[b - a, c - a, d - a]);
    let inv = jac.try_inverse()?;
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    let g0 = -(g1 + g2 + g3);
    Some([g0, g1, g2, g3])
}

/// Compressed adjacency lists.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub offsets: Vec<usize>,
    pub items: Vec<u32>,
}

impl Adjacency {
    fn from_pairs(n: usize, mut pairs: Vec<(u32, u32)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &pairs {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let items = pairs.into_iter().map(|(_, b)| b).collect();
        Adjacency { offsets, items }
    }

    pub fn of(&self, i: usize) -> &[u32] {
        &self.items[self.offsets[i]..self.offsets[i + 1]]
    }
}
