use rayon::prelude::*;

use crate::ecg::{EcgRecord, LEAD_NAMES};
use crate::error::{Error, Result};

/// DTW distance with |a_i − b_j| local cost and the symmetric step pattern
/// D(i,j) = d(i,j) + min(D(i−1,j−1), D(i−1,j), D(i,j−1)); no window.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Validation("dtw needs nonempty series".into()));
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, &x) in a.iter().enumerate() {
        for j in 0..m {
            let d = (x - b[j]).abs();
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j - 1].min(prev[j]).min(cur[j - 1]),
            };
            cur[j] = d + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Pairwise scenario dissimilarity, reduced over leads by max and by mean.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwMatrix {
    pub names: Vec<String>,
    pub max: Vec<Vec<f64>>,
    pub avg: Vec<Vec<f64>>,
}

pub fn dtw_matrix(records: &[EcgRecord]) -> Result<DtwMatrix> {
    for r in records {
        r.check()?;
    }
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.len() != first.len()) {
            return Err(Error::Validation("records differ in length".into()));
        }
    }
    let n = records.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let per_pair = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = (0..LEAD_NAMES.len())
                .map(|l| dtw(&records[i].leads[l], &records[j].leads[l]))
                .collect::<Result<Vec<f64>>>()?;
            let max = d.iter().copied().fold(0.0, f64::max);
            let avg = d.iter().sum::<f64>() / d.len() as f64;
            Ok((max, avg))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max = vec![vec![0.0; n]; n];
    let mut avg = vec![vec![0.0; n]; n];
    for (&(i, j), &(mx, av)) in pairs.iter().zip(&per_pair) {
        max[i][j] = mx;
        max[j][i] = mx;
        avg[i][j] = av;
        avg[j][i] = av;
    }
    Ok(DtwMatrix { names: records.iter().map(|r| r.scenario.clone()).collect(), max, avg })
}
