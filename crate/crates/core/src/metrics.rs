//! Partition agreement (CCR, adjusted Rand index) and the Hausdorff
//! distance between finite sets of center curves.

use std::collections::HashMap;

use crate::error::{FkmError, Result};

/// Contingency counts between two labelings. Rows follow the first
/// labeling, columns the second, both in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTable {
    counts: Vec<Vec<u64>>,
    n: u64,
}

fn relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

impl ConfusionTable {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(FkmError::DimensionMismatch(format!(
                "{} true labels vs {} predicted",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(FkmError::EmptyData("no labels".into()));
        }
        let (a, ka) = relabel(truth);
        let (b, kb) = relabel(pred);
        let mut counts = vec![vec![0u64; kb]; ka];
        for (&i, &j) in a.iter().zip(&b) {
            counts[i][j] += 1;
        }
        Ok(Self {
            counts,
            n: truth.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Largest number of subjects matched by a one-to-one pairing of rows
    /// with columns.
    pub fn best_matching(&self) -> u64 {
        let rows = self.counts.len();
        let cols = self.counts[0].len();
        let size = rows.max(cols);
        let max = self.counts.iter().flatten().copied().max().unwrap_or(0) as i64;
        let cost: Vec<Vec<i64>> = (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| {
                        let c = if i < rows && j < cols {
                            self.counts[i][j] as i64
                        } else {
                            0
                        };
                        max - c
                    })
                    .collect()
            })
            .collect();
        let assignment = hungarian(&cost);
        assignment
            .iter()
            .enumerate()
            .filter(|&(i, &j)| i < rows && j < cols)
            .map(|(i, &j)| self.counts[i][j])
            .sum()
    }
}

/// Minimum-cost perfect matching on a square cost matrix; returns the
/// column matched to each row.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // potentials and matching are 1-indexed; column 0 is a sentinel
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

/// Correct classification rate in percent under the best one-to-one label
/// mapping (an injection from the side with fewer clusters).
pub fn ccr(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let table = ConfusionTable::new(truth, pred)?;
    Ok(100.0 * table.best_matching() as f64 / table.n() as f64)
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. When the chance-corrected denominator vanishes the
/// result is 1 for identical partitions and 0 otherwise.
pub fn adjusted_rand_index(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let table = ConfusionTable::new(truth, pred)?;
    let index: f64 = table.counts.iter().flatten().map(|&c| choose2(c)).sum();
    let row_sums: f64 = table
        .counts
        .iter()
        .map(|r| choose2(r.iter().sum()))
        .sum();
    let cols = table.counts[0].len();
    let col_sums: f64 = (0..cols)
        .map(|j| choose2(table.counts.iter().map(|r| r[j]).sum()))
        .sum();
    let total = choose2(table.n);
    let expected = if total > 0.0 {
        row_sums * col_sums / total
    } else {
        0.0
    };
    let max = 0.5 * (row_sums + col_sums);
    if max == expected {
        let identical = table.counts.len() == cols
            && table
                .counts
                .iter()
                .all(|r| r.iter().filter(|&&c| c > 0).count() == 1);
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

pub const DEFAULT_HAUSDORFF_GRID: usize = 1024;

/// `grid_size` equispaced points on `[0, 1]`, endpoints included.
pub fn uniform_grid(grid_size: usize) -> Vec<f64> {
    match grid_size {
        0 => Vec::new(),
        1 => vec![0.5],
        g => (0..g).map(|i| i as f64 / (g - 1) as f64).collect(),
    }
}

/// Quadrature weights (summing to one) for `len` equispaced samples
/// spanning an interval, endpoints included. From six points on, the
/// trapezoid rule gets fourth-order end corrections; interior points keep
/// equal weight.
pub fn grid_weights(len: usize) -> Vec<f64> {
    match len {
        0 => Vec::new(),
        1 => vec![1.0],
        2..=5 => {
            let h = 1.0 / (len - 1) as f64;
            let mut w = vec![h; len];
            w[0] *= 0.5;
            w[len - 1] *= 0.5;
            w
        }
        _ => {
            let h = 1.0 / (len - 1) as f64;
            let mut w = vec![h; len];
            for (i, c) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].into_iter().enumerate() {
                w[i] = c * h;
                w[len - 1 - i] = c * h;
            }
            w
        }
    }
}

/// Hausdorff distance between two sets of curves sampled on a shared
/// uniform grid that includes both ends of the domain. Curve distances are
/// `L₂` norms over the domain (normalized to unit length) by the weights
/// of [`grid_weights`].
pub fn hausdorff_sampled(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(FkmError::EmptyData("center sets must be nonempty".into()));
    }
    let len = a[0].len();
    if len == 0 || a.iter().chain(b).any(|c| c.len() != len) {
        return Err(FkmError::DimensionMismatch(
            "curves must share a nonempty grid".into(),
        ));
    }
    let w = grid_weights(len);
    let norm = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .zip(&w)
            .map(|((p, q), w)| w * (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    let directed = |from: &[Vec<f64>], to: &[Vec<f64>]| -> f64 {
        from.iter()
            .map(|x| to.iter().map(|y| norm(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Hausdorff distance in `L₂` of the uniform distribution on `[0, 1]`,
/// with curves sampled on [`uniform_grid`]`(grid_size)`.
pub fn hausdorff_centers<F, G>(a: &[F], b: &[G], grid_size: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if grid_size < 2 {
        return Err(FkmError::InvalidConfig("grid needs at least two points".into()));
    }
    let grid = uniform_grid(grid_size);
    let sample = |f: &dyn Fn(f64) -> f64| grid.iter().map(|&t| f(t)).collect::<Vec<f64>>();
    let sa: Vec<Vec<f64>> = a.iter().map(|f| sample(f)).collect();
    let sb: Vec<Vec<f64>> = b.iter().map(|f| sample(f)).collect();
    hausdorff_sampled(&sa, &sb)
}
