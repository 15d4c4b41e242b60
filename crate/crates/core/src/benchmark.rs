//! Replicated simulation cells: simulate, fit, score.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::error::Result;
use crate::fkm::{fit_timed, FitConfig};
use crate::metrics::{adjusted_rand_index, ccr, hausdorff_sampled};
use crate::rng;
use crate::simulation::{generate, PopulationCenters, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub n: usize,
    pub n_tp: u32,
    pub sigma: f64,
    pub basis: BasisKind,
    pub nbasis: usize,
    pub lambda: f64,
    pub restarts: usize,
    pub reps: usize,
    pub seed: u64,
}

impl BenchmarkCell {
    /// Fourier basis with 15 functions, no smoothing.
    pub fn new(n: usize, n_tp: u32, sigma: f64, restarts: usize, reps: usize, seed: u64) -> Self {
        Self {
            n,
            n_tp,
            sigma,
            basis: BasisKind::Fourier,
            nbasis: 15,
            lambda: 0.0,
            restarts,
            reps,
            seed,
        }
    }

    fn stream_key(&self) -> [u64; 3] {
        [self.n as u64, self.n_tp as u64, self.sigma.to_bits()]
    }

    /// Simulation config of replicate `rep`.
    pub fn sim_config(&self, rep: usize) -> SimConfig {
        let [a, b, c] = self.stream_key();
        SimConfig::new(
            self.n,
            self.n_tp,
            self.sigma,
            rng::derive_seed(self.seed, &[0, a, b, c, rep as u64]),
        )
    }

    /// Fit config of replicate `rep`.
    pub fn fit_config(&self, rep: usize) -> FitConfig {
        let [a, b, c] = self.stream_key();
        FitConfig::new(2, self.basis, self.nbasis)
            .with_lambda(self.lambda)
            .with_restarts(self.restarts)
            .with_seed(rng::derive_seed(self.seed, &[1, a, b, c, rep as u64]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub ccr: f64,
    pub ari: f64,
    pub empirical_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff: Option<f64>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: BenchmarkCell,
    pub mean_ccr: f64,
    pub median_ccr: f64,
    pub mean_ari: f64,
    pub median_ari: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_hausdorff: Option<f64>,
    pub median_elapsed_ms: f64,
    pub reps: Vec<RepOutcome>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn run_rep(
    cell: &BenchmarkCell,
    rep: usize,
    population: Option<&PopulationCenters>,
) -> Result<RepOutcome> {
    let (ds, truth) = generate(&cell.sim_config(rep))?;
    let (result, elapsed_ms) = fit_timed(&ds, &cell.fit_config(rep))?;
    let pred = result.assignment.labels();
    let hausdorff = population
        .map(|p| -> Result<f64> {
            let fitted = result.model.evaluate_centers(&p.grid)?;
            hausdorff_sampled(&fitted, &p.curves)
        })
        .transpose()?;
    Ok(RepOutcome {
        rep,
        ccr: ccr(&truth, pred)?,
        ari: adjusted_rand_index(&truth, pred)?,
        empirical_loss: result.empirical_loss,
        iterations: result.iterations,
        converged: result.converged,
        hausdorff,
        elapsed_ms,
    })
}

/// Runs every replicate of `cell` (in parallel on the current rayon pool)
/// and summarizes. Apart from timings the outcome depends only on `cell`.
pub fn run_cell(cell: &BenchmarkCell, population: Option<&PopulationCenters>) -> Result<CellSummary> {
    let reps = (0..cell.reps)
        .into_par_iter()
        .map(|r| run_rep(cell, r, population))
        .collect::<Result<Vec<_>>>()?;
    let ccrs: Vec<f64> = reps.iter().map(|r| r.ccr).collect();
    let aris: Vec<f64> = reps.iter().map(|r| r.ari).collect();
    let times: Vec<f64> = reps.iter().map(|r| r.elapsed_ms).collect();
    let hausdorff: Option<Vec<f64>> = reps.iter().map(|r| r.hausdorff).collect();
    Ok(CellSummary {
        cell: cell.clone(),
        mean_ccr: mean(&ccrs),
        median_ccr: median(&ccrs),
        mean_ari: mean(&aris),
        median_ari: median(&aris),
        median_hausdorff: hausdorff.map(|h| median(&h)),
        median_elapsed_ms: median(&times),
        reps,
    })
}
