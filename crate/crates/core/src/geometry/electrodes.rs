use std::fmt;

use serde::{Deserialize, Serialize};

use super::mesh::{distance, Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Electrode {
    RA,
    LA,
    LL,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
}

impl Electrode {
    pub const ALL: [Electrode; 9] = [
        Electrode::RA,
        Electrode::LA,
        Electrode::LL,
        Electrode::V1,
        Electrode::V2,
        Electrode::V3,
        Electrode::V4,
        Electrode::V5,
        Electrode::V6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["RA", "LA", "LL", "V1", "V2", "V3", "V4", "V5", "V6"][self.index()]
    }
}

impl fmt::Display for Electrode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Positions of the nine recording electrodes, indexed by [`Electrode`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeSet {
    pub positions: [Point; 9],
}

impl ElectrodeSet {
    pub fn get(&self, e: Electrode) -> Point {
        self.positions[e.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Electrode, Point)> + '_ {
        Electrode::ALL.iter().map(|&e| (e, self.positions[e.index()]))
    }

    /// Smallest electrode-to-node distance.
    pub fn clearance(&self, mesh: &Mesh) -> f64 {
        self.positions
            .iter()
            .flat_map(|e| mesh.nodes.iter().map(move |p| distance(e, p)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Azimuths (degrees from +x towards +y) of V1..V6 on the precordial arc.
/// The heart frame has +x anterior, +y towards the patient's left, +z towards the base.
const PRECORDIAL_AZIMUTH: [f64; 6] = [-25.0, 0.0, 20.0, 40.0, 65.0, 90.0];

/// Standard-layout electrodes scaled to the mesh bounding box.
pub fn place_electrodes(mesh: &Mesh) -> ElectrodeSet {
    let (lo, hi) = mesh.bounding_box();
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
    let half = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1]), 0.5 * (hi[2] - lo[2])];
    let radial = half[0].max(half[1]);
    let arc = 1.5 * radial + 3.0;
    let chest_z = lo[2] + 0.55 * (hi[2] - lo[2]);
    let limb = arc + 10.0;

    let mut positions = [[0.0; 3]; 9];
    positions[Electrode::RA.index()] = [c[0], c[1] - limb, hi[2] + 10.0];
    positions[Electrode::LA.index()] = [c[0], c[1] + limb, hi[2] + 10.0];
    positions[Electrode::LL.index()] = [c[0], c[1] + 0.3 * arc, lo[2] - half[2] - 15.0];
    for (k, deg) in PRECORDIAL_AZIMUTH.iter().enumerate() {
        let a = deg.to_radians();
        positions[Electrode::V1.index() + k] = [c[0] + arc * a.cos(), c[1] + arc * a.sin(), chest_z];
    }
    ElectrodeSet { positions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::aha::SEPTAL_SPAN;
    use crate::geometry::coords::Ventricle;
    use crate::geometry::generate::{generate_idealized_biventricle, WallParams};

    #[test]
    fn electrodes_clear_the_heart_and_v1_is_anterior() {
        let mesh = generate_idealized_biventricle(&WallParams::default(), 0.4, 1).unwrap();
        let set = place_electrodes(&mesh);
        assert!(set.clearance(&mesh) > 1.0);
        assert_eq!(set, place_electrodes(&mesh));

        let c = mesh.analytic_coords.as_ref().unwrap();
        let sept_span = SEPTAL_SPAN / std::f64::consts::TAU;
        let (sum, n) = (0..c.len())
            .filter(|&i| c.tv[i] == Ventricle::Lv && c.rt[i] < sept_span)
            .fold((0.0, 0usize), |(s, n), i| (s + mesh.nodes[i][0], n + 1));
        let septal_x = sum / n as f64;
        assert!(set.get(Electrode::V1)[0] > septal_x);
    }
}
