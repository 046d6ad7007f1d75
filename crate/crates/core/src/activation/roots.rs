use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::coords::{wrap_unit, Ventricle, VentricularCoords};

use super::fim::{Root, RootSet};

/// Early activation sites as (ventricle, ab, rt) targets on the endocardium.
pub const ROOT_TARGETS: [(Ventricle, f64, f64); 5] = [
    // LV septal, anterior, posterior
    (Ventricle::Lv, 0.55, 1.0 / 6.0),
    (Ventricle::Lv, 0.55, 0.92),
    (Ventricle::Lv, 0.50, 0.45),
    // RV free wall, anterior and posterior
    (Ventricle::Rv, 0.55, 0.10),
    (Ventricle::Rv, 0.50, 0.25),
];

/// Minimum `tm` for a root node.
pub const ROOT_MIN_TM: f64 = 0.9;

/// Five endocardial roots, all firing at t = 0.
pub fn default_root_set(coords: &VentricularCoords) -> Result<RootSet> {
    let roots = ROOT_TARGETS
        .iter()
        .map(|&(tv, ab, rt)| nearest_endocardial(coords, tv, ab, rt).map(|node| Root { node, time: 0.0 }))
        .collect::<Result<Vec<_>>>()?;
    Ok(RootSet { roots })
}

fn nearest_endocardial(coords: &VentricularCoords, tv: Ventricle, ab: f64, rt: f64) -> Result<usize> {
    let score = |i: usize| {
        let d_rt = (wrap_unit(coords.rt[i] - rt + 0.5) - 0.5).abs();
        ((coords.ab[i] - ab).powi(2) + d_rt.powi(2), -coords.tm[i], i)
    };
    (0..coords.len())
        .filter(|&i| coords.tv[i] == tv && coords.tm[i] > ROOT_MIN_TM)
        .min_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap())
        .ok_or_else(|| Error::Topology(format!("no endocardial {tv:?} node for an activation root")))
}

/// Copy of `roots` with onset times jittered by up to ±`jitter_ms` around
/// their nominal value, shifted so the earliest root still fires at its
/// original minimum.
pub fn jitter_root_times(roots: &RootSet, jitter_ms: f64, seed: u64) -> RootSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = roots.roots.iter().map(|r| r.time).fold(f64::INFINITY, f64::min);
    let mut out: Vec<Root> = roots
        .roots
        .iter()
        .map(|r| Root { node: r.node, time: r.time + rng.random_range(-jitter_ms..=jitter_ms) })
        .collect();
    let min = out.iter().map(|r| r.time).fold(f64::INFINITY, f64::min);
    for r in &mut out {
        r.time += base - min;
    }
    RootSet { roots: out }
}
