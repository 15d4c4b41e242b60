//! Lloyd's k-means on dense vectors, with random restarts.

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{FkmError, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn lloyd(data: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KMeansResult {
    let dim = data[0].len();
    let k = centroids.len();
    let mut labels = vec![usize::MAX; data.len()];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut changed = false;
        for (point, label) in data.iter().zip(labels.iter_mut()) {
            let (best, _) = nearest(point, &centroids);
            if best != *label {
                *label = best;
                changed = true;
            }
        }
        if !changed || iterations >= max_iter {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (point, &label) in data.iter().zip(&labels) {
            counts[label] += 1;
            for (s, x) in sums[label].iter_mut().zip(point) {
                *s += x;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            // an emptied centroid keeps its previous position
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    let inertia = data
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    KMeansResult {
        centroids,
        labels,
        inertia,
        iterations,
    }
}

/// Best of `restarts` Lloyd runs, each seeded with `k` distinct data points
/// drawn from its own stream. Ties keep the earliest restart.
pub fn kmeans(
    data: &[Vec<f64>],
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<KMeansResult> {
    if k == 0 || restarts == 0 {
        return Err(FkmError::InvalidConfig("k and restarts must be positive".into()));
    }
    if data.len() < k {
        return Err(FkmError::TooFewSubjects {
            needed: k,
            have: data.len(),
        });
    }
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, &[r as u64]);
            let init = sample(&mut rng, data.len(), k)
                .into_iter()
                .map(|i| data[i].clone())
                .collect();
            lloyd(data, init, max_iter)
        })
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.inertia < runs[best].inertia {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one run"))
}
