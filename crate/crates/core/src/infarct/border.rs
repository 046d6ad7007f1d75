use crate::geometry::mesh::{Mesh, Point};
use crate::geometry::spatial::PointIndex;

use super::{Tissue, TissueMap};

/// Relabels every normal node within `bz_radius` (Euclidean, node to node)
/// of a scar node as border zone. Scar labels are left untouched.
pub fn grow_border_zone(mesh: &Mesh, scar: &TissueMap, bz_radius: f64) -> TissueMap {
    let mut out = scar.clone();
    if bz_radius <= 0.0 {
        for l in &mut out.labels {
            if *l == Tissue::BorderZone {
                *l = Tissue::Normal;
            }
        }
        return out;
    }
    let scar_nodes: Vec<usize> = scar.nodes(Tissue::Scar).collect();
    let pts: Vec<Point> = scar_nodes.iter().map(|&i| mesh.nodes[i]).collect();
    let index = PointIndex::new(&pts);
    for (i, l) in out.labels.iter_mut().enumerate() {
        if *l != Tissue::Scar {
            *l = if index.within(&mesh.nodes[i], bz_radius).is_empty() { Tissue::Normal } else { Tissue::BorderZone };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::distance_sq;

    #[test]
    fn zero_radius_gives_no_border_zone() {
        let mesh = Mesh::structured_box([0.0; 3], [3, 3, 3], 0.1);
        let mut t = TissueMap::healthy(mesh.node_count());
        t.labels[10] = Tissue::Scar;
        let out = grow_border_zone(&mesh, &t, 0.0);
        assert_eq!(out.count(Tissue::BorderZone), 0);
        assert_eq!(out.count(Tissue::Scar), 1);
    }

    #[test]
    fn matches_brute_force_on_lattice_ties() {
        // lattice spacing 0.1 puts many neighbours at exactly 0.2
        let mesh = Mesh::structured_box([0.0; 3], [7, 7, 7], 0.1);
        let mut t = TissueMap::healthy(mesh.node_count());
        for i in (0..mesh.node_count()).step_by(97) {
            t.labels[i] = Tissue::Scar;
        }
        let out = grow_border_zone(&mesh, &t, 0.2);
        for (i, p) in mesh.nodes.iter().enumerate() {
            let want = if t.labels[i] == Tissue::Scar {
                Tissue::Scar
            } else if t.nodes(Tissue::Scar).any(|s| distance_sq(p, &mesh.nodes[s]) <= 0.2 * 0.2) {
                Tissue::BorderZone
            } else {
                Tissue::Normal
            };
            assert_eq!(out.labels[i], want, "node {i}");
        }
    }
}
