//! Synthetic two-cluster sparse data and its population-optimal centers.
//!
//! Subject `i` of cluster `k` has `N_i ~ Binomial(2·N_tp, 1/2)` observations
//! (at least 2) at uniform times, with values
//!
//! ```text
//! X_i(t) = Σ_{u=1}^{40} (u⁻¹(Z_iu − 1) + μ_{k,u}) √2 sin(πut) + ε
//! ```
//!
//! with `Z_iu ~ Exp(1)` drawn independently for every subject and term and
//! shared across the subject's observations, and `ε ~ N(0, σ²)` drawn per
//! observation.

use std::f64::consts::{PI, SQRT_2};
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{SparseFunctionalDataset, SubjectRecord};
use crate::error::{FkmError, Result};
use crate::kmeans::kmeans;
use crate::rng;

pub const N_TERMS: usize = 40;
pub const MIN_OBSERVATIONS: u64 = 2;
pub const POPULATION_RESTARTS: usize = 50;

const MU1_HEAD: [f64; 6] = [0.5, -0.2, 1.0, -0.5, 0.0, -0.7];
const MU2_HEAD: [f64; 6] = [0.0, -0.75, 0.75, -0.15, 1.4, 0.1];

/// Cluster mean coefficients `μ_k` (length 40, zero beyond the sixth term).
/// `cluster` is 1 or 2.
pub fn mu(cluster: usize) -> [f64; N_TERMS] {
    let head = match cluster {
        1 => MU1_HEAD,
        2 => MU2_HEAD,
        _ => panic!("cluster must be 1 or 2, got {cluster}"),
    };
    let mut out = [0.0; N_TERMS];
    out[..6].copy_from_slice(&head);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of subjects; half go to each cluster.
    pub n: usize,
    /// Expected number of observations per subject.
    pub n_tp: u32,
    /// Noise standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, n_tp: u32, sigma: f64, seed: u64) -> Self {
        Self { n, n_tp, sigma, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(FkmError::InvalidConfig(format!(
                "number of subjects must be even and at least 2, got {}",
                self.n
            )));
        }
        if self.n_tp < 2 {
            return Err(FkmError::InvalidConfig(format!(
                "expected observation count must be at least 2, got {}",
                self.n_tp
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(FkmError::InvalidConfig(format!(
                "noise level must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// `√2 sin(πut)` for `u = 1..=40`.
fn sine_terms(t: f64) -> [f64; N_TERMS] {
    let mut out = [0.0; N_TERMS];
    for (u, v) in out.iter_mut().enumerate() {
        *v = SQRT_2 * (PI * (u + 1) as f64 * t).sin();
    }
    out
}

/// Curve coefficients `u⁻¹(Z_u − 1) + μ_{k,u}` of one subject, drawing the
/// 40 effects from `rng` unless pinned to `fixed_z`.
fn subject_coefficients<R: Rng + ?Sized>(cluster: usize, rng: &mut R, fixed_z: Option<f64>) -> [f64; N_TERMS] {
    let effect = Exp::new(1.0).expect("valid rate");
    let mut c = mu(cluster);
    for (u, v) in c.iter_mut().enumerate() {
        let z: f64 = effect.sample(rng);
        *v += (fixed_z.unwrap_or(z) - 1.0) / (u + 1) as f64;
    }
    c
}

fn curve_value(coef: &[f64; N_TERMS], t: f64) -> f64 {
    coef.iter().zip(sine_terms(t)).map(|(c, s)| c * s).sum()
}

/// Noiseless mean curve of cluster `cluster` (1 or 2), i.e. `Z ≡ 1`.
pub fn mean_curve(cluster: usize, t: f64) -> f64 {
    curve_value(&mu(cluster), t)
}

/// Simulated dataset on the domain `[0, 1]` and the planted (zero-based)
/// labels. Subjects are named `s1`, `s2`, ….
pub fn generate(cfg: &SimConfig) -> Result<(SparseFunctionalDataset, Vec<usize>)> {
    generate_with(cfg, None)
}

/// [`generate`] with every subject effect optionally pinned to `fixed_z`.
pub fn generate_with(
    cfg: &SimConfig,
    fixed_z: Option<f64>,
) -> Result<(SparseFunctionalDataset, Vec<usize>)> {
    cfg.validate()?;
    let count = Binomial::new(2 * cfg.n_tp as u64, 0.5).expect("valid binomial parameters");
    let noise = Normal::new(0.0, cfg.sigma).expect("validated sigma");
    let half = cfg.n / 2;
    let mut subjects = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let cluster = if i < half { 1 } else { 2 };
        let mut rng = rng::stream(cfg.seed, &[i as u64]);
        let n_obs = count.sample(&mut rng).max(MIN_OBSERVATIONS) as usize;
        let coef = subject_coefficients(cluster, &mut rng, fixed_z);
        let times: Vec<f64> = (0..n_obs).map(|_| rng.random::<f64>()).collect();
        let values = times
            .iter()
            .map(|&t| curve_value(&coef, t) + noise.sample(&mut rng))
            .collect();
        subjects.push(SubjectRecord::new(format!("s{}", i + 1), times, values));
        labels.push(cluster - 1);
    }
    Ok((SparseFunctionalDataset::with_domain(subjects, 0.0, 1.0)?, labels))
}

/// k-means centroids of noiseless, densely observed curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationCenters {
    /// Equispaced grid on `[0, 1]`, endpoints included.
    pub grid: Vec<f64>,
    /// One curve per cluster, ordered so the first is nearest cluster 1's
    /// mean curve.
    pub curves: Vec<Vec<f64>>,
}

impl PopulationCenters {
    /// Writes `t,f1,f2,…`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.curves.len()).map(|k| format!("f{k}")));
        w.write_record(&header)?;
        for (g, t) in self.grid.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.curves.iter().map(|c| c[g].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let k = rdr.headers()?.len().saturating_sub(1);
        if k == 0 {
            return Err(FkmError::EmptyData("no center columns".into()));
        }
        let mut grid = Vec::new();
        let mut curves = vec![Vec::new(); k];
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let parse = |i: usize| -> Result<f64> {
                let raw = record.get(i).unwrap_or("");
                raw.parse().map_err(|_| FkmError::Parse {
                    line,
                    column: i.to_string(),
                    value: raw.to_string(),
                })
            };
            grid.push(parse(0)?);
            for (c, curve) in curves.iter_mut().enumerate() {
                curve.push(parse(c + 1)?);
            }
        }
        if grid.is_empty() {
            return Err(FkmError::EmptyData("no grid rows".into()));
        }
        Ok(Self { grid, curves })
    }
}

/// Population-optimal centers for the two-cluster design: `n_large`
/// noiseless subjects observed on `grid_size` equispaced points, clustered
/// by vector k-means with [`POPULATION_RESTARTS`] restarts.
pub fn population_centers(n_large: usize, grid_size: usize, seed: u64) -> Result<PopulationCenters> {
    if n_large < 1000 || n_large % 2 != 0 {
        return Err(FkmError::InvalidConfig(format!(
            "population size must be even and at least 1000, got {n_large}"
        )));
    }
    if grid_size < 100 {
        return Err(FkmError::InvalidConfig(format!(
            "population grid needs at least 100 points, got {grid_size}"
        )));
    }
    population_centers_with(n_large, grid_size, seed, POPULATION_RESTARTS)
}

/// [`population_centers`] without the size floor and with a chosen restart
/// count.
pub fn population_centers_with(
    n_large: usize,
    grid_size: usize,
    seed: u64,
    restarts: usize,
) -> Result<PopulationCenters> {
    if n_large < 2 || grid_size < 2 {
        return Err(FkmError::InvalidConfig("population too small".into()));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|g| g as f64 / (grid_size - 1) as f64)
        .collect();
    let table: Vec<[f64; N_TERMS]> = grid.iter().map(|&t| sine_terms(t)).collect();
    let half = n_large / 2;
    let data: Vec<Vec<f64>> = (0..n_large)
        .map(|i| {
            let cluster = if i < half { 1 } else { 2 };
            let mut rng = rng::stream(seed, &[i as u64]);
            let coef = subject_coefficients(cluster, &mut rng, None);
            table
                .iter()
                .map(|s| coef.iter().zip(s).map(|(c, v)| c * v).sum())
                .collect()
        })
        .collect();
    let fit = kmeans(&data, 2, restarts, 300, rng::derive_seed(seed, &[u64::MAX]))?;
    let mean1: Vec<f64> = grid.iter().map(|&t| mean_curve(1, t)).collect();
    let mut curves = fit.centroids;
    let dist = |c: &[f64]| -> f64 { c.iter().zip(&mean1).map(|(a, b)| (a - b) * (a - b)).sum() };
    if dist(&curves[1]) < dist(&curves[0]) {
        curves.swap(0, 1);
    }
    Ok(PopulationCenters { grid, curves })
}
