//! Pseudo-ECG electrode potentials and the eight-lead record.

pub mod leads;
pub mod potentials;
pub mod record;

pub use leads::derive_leads;
pub use potentials::{electrode_potentials, LeadField, Potentials};
pub use record::{normalize_and_resample, EcgRecord, LEAD_NAMES, RESAMPLED_LEN};
