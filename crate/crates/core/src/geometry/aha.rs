//! AHA 17-segment model on ventricular coordinates.
//!
//! All band edges and sector conventions live here so the scar catalog and
//! the tests read the same numbers. Bands are cut on `ab` (0 apex, 1 base):
//!
//! | band     | ab range       | sectors                     |
//! |----------|----------------|-----------------------------|
//! | basal    | [0.65, 1]      | sextants, segments 1-6      |
//! | mid      | [0.30, 0.65)   | sextants, segments 7-12     |
//! | apical   | [0.05, 0.30)   | quadrants, segments 13-16   |
//! | apex cap | [0, 0.05)      | segment 17                  |
//!
//! `rt` starts at the anterior LV/RV junction and runs through the septum,
//! so the first sextant is anteroseptal and the last is anterior.

use crate::error::{Error, Result};

use super::coords::{wrap_unit, NodeCoords, Ventricle};

/// Below this ab a node is in the apex cap (more than 95% of the way from base to apex).
pub const APEX_CAP_AB: f64 = 0.05;
/// Upper edge of the apical band.
pub const APICAL_AB: f64 = 0.30;
/// Upper edge of the mid band; basal above.
pub const MID_AB: f64 = 0.65;

/// Azimuth (radians, about +z from +x) of the anterior LV/RV junction in the
/// idealized geometry. The septum is centred on -y, the anterior wall on +x.
pub const DEFAULT_ANTERIOR_JUNCTION: f64 = -std::f64::consts::PI / 6.0;
/// Angular span of the septum / RV attachment (radians).
pub const SEPTAL_SPAN: f64 = 2.0 * std::f64::consts::PI / 3.0;

/// Basal segment for each rt sextant, in rt order.
pub const BASAL_BY_SEXTANT: [u8; 6] = [2, 3, 4, 5, 6, 1];
/// Mid segment for each rt sextant.
pub const MID_BY_SEXTANT: [u8; 6] = [8, 9, 10, 11, 12, 7];
/// Apical quadrants, starting at rt = 1/24 (septal quadrant centred on the septum).
pub const APICAL_BY_QUADRANT: [u8; 4] = [14, 15, 16, 13];
pub const APICAL_QUADRANT_OFFSET: f64 = 1.0 / 24.0;

pub const SEGMENT_NAMES: [&str; 17] = [
    "basal anterior",
    "basal anteroseptal",
    "basal inferoseptal",
    "basal inferior",
    "basal inferolateral",
    "basal anterolateral",
    "mid anterior",
    "mid anteroseptal",
    "mid inferoseptal",
    "mid inferior",
    "mid inferolateral",
    "mid anterolateral",
    "apical anterior",
    "apical septal",
    "apical inferior",
    "apical lateral",
    "apex",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Basal,
    Mid,
    Apical,
    ApexCap,
}

pub fn band(ab: f64) -> Band {
    if ab < APEX_CAP_AB {
        Band::ApexCap
    } else if ab < APICAL_AB {
        Band::Apical
    } else if ab < MID_AB {
        Band::Mid
    } else {
        Band::Basal
    }
}

/// AHA segment (1..=17) of an LV node.
pub fn aha_segment(c: &NodeCoords) -> Result<u8> {
    if c.tv != Ventricle::Lv {
        return Err(Error::Domain("AHA segments are defined on the LV only".into()));
    }
    let rt = wrap_unit(c.rt);
    let sextant = ((rt * 6.0) as usize).min(5);
    Ok(match band(c.ab) {
        Band::ApexCap => 17,
        Band::Apical => {
            let q = ((wrap_unit(rt - APICAL_QUADRANT_OFFSET) * 4.0) as usize).min(3);
            APICAL_BY_QUADRANT[q]
        }
        Band::Mid => MID_BY_SEXTANT[sextant],
        Band::Basal => BASAL_BY_SEXTANT[sextant],
    })
}

/// Segment of every node, `None` for RV nodes.
pub fn segments(coords: &super::coords::VentricularCoords) -> Vec<Option<u8>> {
    (0..coords.len()).map(|i| aha_segment(&coords.at(i)).ok()).collect()
}
