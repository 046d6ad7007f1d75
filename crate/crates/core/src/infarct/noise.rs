use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::mesh::{distance_sq, Mesh};
use crate::geometry::spatial::PointIndex;

/// Uniform(0,1) node draws smoothed by a Gaussian kernel of bandwidth
/// `sigma` (truncated at 3 sigma) and rescaled to [0, 1].
pub fn correlated_noise_field(mesh: &Mesh, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("noise sigma must be positive, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..mesh.node_count()).map(|_| rng.random::<f64>()).collect();
    let index = PointIndex::new(&mesh.nodes);
    let inv = -0.5 / (sigma * sigma);
    let smooth: Vec<f64> = mesh
        .nodes
        .par_iter()
        .map(|p| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in index.within(p, 3.0 * sigma) {
                let w = (distance_sq(p, &mesh.nodes[j]) * inv).exp();
                num += w * raw[j];
                den += w;
            }
            num / den
        })
        .collect();
    Ok(rescale(smooth))
}

fn rescale(mut v: Vec<f64>) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        for x in &mut v {
            *x = (*x - lo) / (hi - lo);
        }
    } else {
        v.iter_mut().for_each(|x| *x = 0.5);
    }
    v
}

/// Pearson correlation of field values over node pairs whose distance
/// falls in `[lag - half_width, lag + half_width]`.
pub fn correlogram_at(mesh: &Mesh, field: &[f64], lag: f64, half_width: f64) -> Option<f64> {
    let index = PointIndex::new(&mesh.nodes);
    let (lo2, hi) = ((lag - half_width).max(0.0).powi(2), lag + half_width);
    let mut pairs = Vec::new();
    for (i, p) in mesh.nodes.iter().enumerate() {
        for j in index.within(p, hi) {
            if j > i && distance_sq(p, &mesh.nodes[j]) >= lo2 {
                pairs.push((field[i], field[j]));
            }
        }
    }
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    // symmetric pairs: both orders share one mean and variance
    let mean = pairs.iter().map(|(a, b)| a + b).sum::<f64>() / (2.0 * n);
    let var = pairs.iter().map(|(a, b)| (a - mean).powi(2) + (b - mean).powi(2)).sum::<f64>() / (2.0 * n);
    let cov = pairs.iter().map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / n;
    (var > 0.0).then(|| cov / var)
}
