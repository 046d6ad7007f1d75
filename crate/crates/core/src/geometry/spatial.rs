//! Spatial queries over node positions, backed by a k-d tree.

use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, Vector3};

use super::mesh::{distance_sq, Mesh, Point};

pub struct PointIndex {
    tree: Option<ImmutableKdTree<f64, 3>>,
    points: Vec<Point>,
}

impl PointIndex {
    pub fn new(points: &[Point]) -> Self {
        let tree = if points.is_empty() {
            None
        } else {
            Some(ImmutableKdTree::new_from_slice(points).expect("k-d tree construction"))
        };
        PointIndex { tree, points: points.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of all points with `|p - q| <= radius`, ascending.
    ///
    /// The tree is queried with a slightly inflated radius and candidates are
    /// re-checked with [`distance_sq`], so ties at the radius are decided the
    /// same way as in a plain all-pairs scan.
    pub fn within(&self, q: &Point, radius: f64) -> Vec<usize> {
        let Some(tree) = &self.tree else { return Vec::new() };
        let r2 = radius * radius;
        let padded = r2 * (1.0 + 1e-9) + 1e-18;
        let mut out: Vec<usize> = tree
            .query(q)
            .within::<SquaredEuclidean<f64>>(padded)
            .unsorted()
            .execute()
            .into_iter()
            .map(|hit| hit.item as usize)
            .filter(|&i| distance_sq(&self.points[i], q) <= r2)
            .collect();
        out.sort_unstable();
        out
    }

    /// The `k` nearest points, closest first.
    pub fn nearest(&self, q: &Point, k: usize) -> Vec<(usize, f64)> {
        let (Some(tree), Some(k)) = (&self.tree, NonZero::new(k.min(self.points.len()))) else {
            return Vec::new();
        };
        tree.query(q)
            .nearest_n::<SquaredEuclidean<f64>>(k)
            .execute()
            .into_iter()
            .map(|hit| (hit.item as usize, hit.distance.sqrt()))
            .collect()
    }
}

/// Point-in-tet location.
pub struct TetLocator<'a> {
    mesh: &'a Mesh,
    centroids: PointIndex,
}

impl<'a> TetLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let centroids: Vec<Point> = (0..mesh.tet_count()).map(|t| mesh.centroid(t).into()).collect();
        TetLocator { mesh, centroids: PointIndex::new(&centroids) }
    }

    /// Containing tet and barycentric weights of `p`, if `p` lies in the mesh.
    pub fn locate(&self, p: &Point) -> Option<(usize, [f64; 4])> {
        const TOL: f64 = 1e-9;
        for (t, _) in self.centroids.nearest(p, 64) {
            if let Some(b) = barycentric(self.mesh, t, p) {
                if b.iter().all(|&w| w >= -TOL) {
                    return Some((t, b));
                }
            }
        }
        None
    }

    /// Linear interpolation of a nodal field at `p`.
    pub fn interpolate(&self, field: &[f64], p: &Point) -> Option<f64> {
        let (t, b) = self.locate(p)?;
        let tet = self.mesh.tets[t];
        Some((0..4).map(|a| b[a] * field[tet[a] as usize]).sum())
    }
}

pub fn barycentric(mesh: &Mesh, t: usize, p: &Point) -> Option<[f64; 4]> {
    let [a, b, c, d] = mesh.tet_points(t);
    let m = Matrix3::from_columns(&[b - a, c - a, d - a]);
    let x = m.try_inverse()? * (Vector3::from(*p) - a);
    Some([1.0 - x.x - x.y - x.z, x.x, x.y, x.z])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radius_query_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point> = (0..400).map(|_| [0, 1, 2].map(|_| rng.random_range(0.0..2.0))).collect();
        let idx = PointIndex::new(&pts);
        for q in pts.iter().take(50) {
            let got = idx.within(q, 0.35);
            let want: Vec<usize> =
                (0..pts.len()).filter(|&i| distance_sq(&pts[i], q) <= 0.35 * 0.35).collect();
            assert_eq!(got, want);
        }
        let near = idx.nearest(&pts[3], 1);
        assert_eq!(near[0].0, 3);
    }

    #[test]
    fn locate_reproduces_linear_field() {
        let mesh = Mesh::structured_box([0.0; 3], [4, 4, 4], 0.25);
        let field: Vec<f64> = mesh.nodes.iter().map(|p| p[0] + 2.0 * p[1] - p[2]).collect();
        let loc = TetLocator::new(&mesh);
        let p = [0.33, 0.71, 0.52];
        let v = loc.interpolate(&field, &p).unwrap();
        assert!((v - (0.33 + 1.42 - 0.52)).abs() < 1e-12);
        assert!(loc.locate(&[2.0, 0.0, 0.0]).is_none());
    }
}
