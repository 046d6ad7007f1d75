#![allow(dead_code)]

use std::sync::OnceLock;

use cardiotwin::activation::{Root, RootSet};
use cardiotwin::geometry::coords::{compute_ventricular_coordinates, VentricularCoords};
use cardiotwin::geometry::fibers::{assign_fibers, FiberField, Triad};
use cardiotwin::geometry::generate::{generate_idealized_biventricle, WallParams};
use cardiotwin::geometry::mesh::Mesh;
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coarse biventricle shared by the tests of one binary.
pub struct Fixture {
    pub mesh: Mesh,
    pub coords: VentricularCoords,
    pub fibers: FiberField,
}

pub const COARSE_EDGE: f64 = 0.3;

pub fn coarse() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mesh = generate_idealized_biventricle(&WallParams::default(), COARSE_EDGE, 7).unwrap();
        let coords = compute_ventricular_coordinates(&mesh).unwrap();
        let fibers = assign_fibers(&mesh, &coords, 60.0, -60.0).unwrap();
        Fixture { mesh, coords, fibers }
    })
}

pub fn aligned_fibers(mesh: &Mesh) -> FiberField {
    FiberField { triads: vec![Triad::identity(); mesh.tet_count()], fallback: vec![] }
}

pub fn isotropic(mesh: &Mesh, v: f64) -> Vec<Matrix3<f64>> {
    vec![Matrix3::identity() * v * v; mesh.tet_count()]
}

pub fn single_root(node: usize) -> RootSet {
    RootSet { roots: vec![Root { node, time: 0.0 }] }
}

/// Uniform draws in [0, 1), one per node.
pub fn uniform_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
