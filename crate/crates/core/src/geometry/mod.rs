//! Ventricular geometry: meshes, coordinates, segments, fibers, electrodes.

pub mod aha;
pub mod coords;
pub mod electrodes;
pub mod fibers;
pub mod generate;
pub mod laplace;
pub mod mesh;
pub mod spatial;

pub use aha::{aha_segment, Band};
pub use electrodes::{place_electrodes, Electrode, ElectrodeSet};
pub use coords::{compute_ventricular_coordinates, NodeCoords, Ventricle, VentricularCoords};
pub use fibers::{assign_fibers, FiberField, Triad};
pub use generate::{generate_idealized_biventricle, WallParams};
pub use mesh::{Mesh, Point, SurfaceTag};
