//! Transmembrane voltages from activation times (diffusion-free reaction-Eikonal).

pub mod apd;
pub mod cell;
pub mod simulate;

pub use apd::{apd_field, ApdParams};
pub use cell::{calibrate_ms_for_apd, CalibrationTable, ReactionParams};
pub use simulate::{simulate_transmembrane, VoltageTraces};
