//! Smoothing-parameter selection by clustering instability.
//!
//! For every candidate `λ` and replicate, the subjects are split at random
//! into two halves, FKM is fit on each half, and every subject of the full
//! dataset is labeled by both fitted models. The instability of `λ` is the
//! mean, over replicates, of the disagreement rate between the two
//! labelings after the best matching of cluster labels. Replicate splits
//! are shared across candidates.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SparseFunctionalDataset;
use crate::error::{FkmError, Result};
use crate::fkm::{fit, ClusterModel, FitConfig};
use crate::metrics::ccr;
use crate::rng;

/// Restarts per half-sample fit unless the caller asks otherwise.
pub const DEFAULT_SELECTION_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub candidates: Vec<f64>,
    pub instability: Vec<f64>,
    pub chosen: f64,
    pub replicates: usize,
    pub seed: u64,
}

fn label_all(ds: &SparseFunctionalDataset, model: &ClusterModel) -> Result<Vec<usize>> {
    ds.subjects().iter().map(|s| model.predict(s)).collect()
}

/// Fraction of subjects whose labels disagree under the best one-to-one
/// matching of the two label sets.
pub fn matched_disagreement(a: &[usize], b: &[usize]) -> Result<f64> {
    Ok(1.0 - ccr(a, b)? / 100.0)
}

/// Split of `0..n` used by replicate `r`.
fn split(n: usize, seed: u64, replicate: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, &[0, replicate as u64]));
    let second = idx.split_off(n / 2);
    let mut first = idx;
    first.sort_unstable();
    let mut second = second;
    second.sort_unstable();
    (first, second)
}

pub fn select_lambda(
    ds: &SparseFunctionalDataset,
    base: &FitConfig,
    candidates: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<LambdaSelection> {
    if candidates.is_empty() {
        return Err(FkmError::InvalidConfig("no candidate smoothing parameters".into()));
    }
    if let Some(bad) = candidates.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(FkmError::InvalidConfig(format!(
            "candidate smoothing parameters must be nonnegative, got {bad}"
        )));
    }
    if replicates < 1 {
        return Err(FkmError::InvalidConfig("need at least one replicate".into()));
    }
    if ds.n() < 2 * base.k {
        return Err(FkmError::TooFewSubjects {
            needed: 2 * base.k,
            have: ds.n(),
        });
    }
    base.cluster_lambdas()?;

    let cells: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..replicates).map(move |r| (c, r)))
        .collect();
    let scores: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(c, r)| {
            let (first, second) = split(ds.n(), seed, r);
            let mut config = base.clone();
            config.lambdas = vec![candidates[c]];
            let mut labelings = Vec::with_capacity(2);
            for (half, members) in [first, second].iter().enumerate() {
                config.seed = rng::derive_seed(seed, &[1, r as u64, half as u64]);
                let sub = ds.subset(members);
                // halves keep the full domain, so both models share its transform
                let fitted = fit(&sub, &config)?;
                labelings.push(label_all(ds, &fitted.model)?);
            }
            matched_disagreement(&labelings[0], &labelings[1])
        })
        .collect();

    let mut instability = vec![0.0; candidates.len()];
    for (&(c, _), score) in cells.iter().zip(scores) {
        instability[c] += score? / replicates as f64;
    }
    let mut best = 0;
    for c in 1..candidates.len() {
        let better = instability[c] < instability[best]
            || (instability[c] == instability[best] && candidates[c] < candidates[best]);
        if better {
            best = c;
        }
    }
    Ok(LambdaSelection {
        candidates: candidates.to_vec(),
        instability,
        chosen: candidates[best],
        replicates,
        seed,
    })
}
