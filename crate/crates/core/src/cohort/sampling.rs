use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::mesh::{distance_sq, Mesh};

/// Farthest-point sample of `count` nodes starting from a seed-chosen node;
/// indices returned ascending.
pub fn subsample_nodes(mesh: &Mesh, count: usize, seed: u64) -> Result<Vec<usize>> {
    let n = mesh.node_count();
    if count > n {
        return Err(Error::Validation(format!("mesh has {n} nodes, cannot sample {count}")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let start = ChaCha8Rng::seed_from_u64(seed).random_range(0..n);
    let mut chosen = Vec::with_capacity(count);
    let mut dist = vec![f64::INFINITY; n];
    let mut next = start;
    for _ in 0..count {
        chosen.push(next);
        let p = mesh.nodes[next];
        dist.par_iter_mut().zip(&mesh.nodes).for_each(|(d, q)| *d = d.min(distance_sq(&p, q)));
        // farthest node; ties go to the lowest index
        next = dist
            .par_iter()
            .enumerate()
            .map(|(i, &d)| (d, i))
            .reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            })
            .1;
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Smallest pairwise distance in a node subset.
pub fn min_pairwise_distance(mesh: &Mesh, nodes: &[usize]) -> f64 {
    nodes
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            nodes[a + 1..]
                .iter()
                .map(|&j| distance_sq(&mesh.nodes[i], &mesh.nodes[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
        .sqrt()
}
