use std::fs::File;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fkm_core::fkm::fit_timed;
use fkm_core::selection;
use fkm_core::benchmark::{run_cell, BenchmarkCell, CellSummary};
use fkm_core::metrics::{hausdorff_sampled, uniform_grid};
use fkm_core::{
    adjusted_rand_index, ccr, generate, ClusterModel, CsvColumns,
    FitConfig, FitResult, FkmError, PopulationCenters, SimConfig, SparseFunctionalDataset,
};

use crate::args::*;
use crate::output::{
    align_labels, create, read_json, read_labels, write_json, write_labels, LabelRow, RunManifest,
};

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn load(data: &DataArgs) -> Result<SparseFunctionalDataset> {
    let cols = CsvColumns {
        subject: data.id_col.clone(),
        time: data.time_col.clone(),
        value: data.value_col.clone(),
    };
    let ds = SparseFunctionalDataset::load_csv(&data.input, &cols)
        .with_context(|| format!("loading {}", data.input.display()))?;
    Ok(match (data.t_lo, data.t_hi) {
        (Some(lo), Some(hi)) => SparseFunctionalDataset::with_domain(ds.subjects().to_vec(), lo, hi)?,
        _ => ds,
    })
}

fn fit_config(model: &ModelArgs, lambdas: &[f64], restarts: usize, seed: u64) -> FitConfig {
    let mut config = FitConfig::new(model.k, model.basis, model.nbasis)
        .with_restarts(restarts)
        .with_seed(seed)
        .with_weights(model.weights)
        .with_max_iter(model.max_iter);
    config.basis.order = model.order;
    config.lambdas = lambdas.to_vec();
    config
}

fn label_rows<'a>(ids: impl Iterator<Item = &'a str>, labels: &[usize]) -> Vec<LabelRow> {
    ids.zip(labels)
        .map(|(id, &l)| LabelRow {
            id: id.to_string(),
            cluster: l + 1,
        })
        .collect()
}

/// Everything `fkm fit` knows about a run; `predict` and `center-distance`
/// read the model back from it.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub config: FitConfig,
    pub domain: (f64, f64),
    pub labels: Vec<LabelRow>,
    pub result: FitResult,
    pub elapsed_ms: f64,
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let start = Instant::now();
    let ds = load(&args.data)?;
    let config = fit_config(&args.model, &args.lambda, args.restarts, args.seed);
    let (result, fit_ms) = fit_timed(&ds, &config)?;
    let labels = label_rows(ds.ids(), result.assignment.labels());
    write_labels(&args.out.join("labels.csv"), &labels)?;
    let report = FitReport {
        config,
        domain: ds.domain(),
        labels,
        result,
        elapsed_ms: fit_ms,
    };
    write_json(&args.out.join("fit.json"), &report)?;
    RunManifest::new(
        "fit",
        args,
        Some(args.seed),
        vec!["fit.json", "labels.csv"],
        elapsed_ms(start),
    )?
    .write(&args.out)?;
    println!(
        "subjects={} k={} loss={} iterations={} converged={}",
        ds.n(),
        report.config.k,
        report.result.empirical_loss,
        report.result.iterations,
        report.result.converged
    );
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let start = Instant::now();
    let report: FitReport = read_json(&args.model)?;
    let ds = load(&args.data)?;
    let labels = ds
        .subjects()
        .iter()
        .map(|s| report.result.model.predict(s))
        .collect::<fkm_core::Result<Vec<_>>>()?;
    write_labels(&args.out.join("labels.csv"), &label_rows(ds.ids(), &labels))?;
    RunManifest::new("predict", args, None, vec!["labels.csv"], elapsed_ms(start))?.write(&args.out)?;
    println!("subjects={}", ds.n());
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = SimConfig::new(args.n, args.ntp, args.sigma, args.seed);
    let (ds, truth) = generate(&cfg)?;
    ds.write_csv(create(&args.out.join("data.csv"))?)?;
    write_labels(&args.out.join("labels.csv"), &label_rows(ds.ids(), &truth))?;
    RunManifest::new(
        "simulate",
        args,
        Some(args.seed),
        vec!["data.csv", "labels.csv"],
        elapsed_ms(start),
    )?
    .write(&args.out)?;
    println!("subjects={} observations={}", ds.n(), ds.total_observations());
    Ok(())
}

#[derive(Debug, Serialize)]
struct Agreement {
    ccr: f64,
    ari: f64,
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let start = Instant::now();
    let (truth, pred) = align_labels(&read_labels(&args.truth)?, &read_labels(&args.pred)?)?;
    let agreement = Agreement {
        ccr: ccr(&truth, &pred)?,
        ari: adjusted_rand_index(&truth, &pred)?,
    };
    println!("{}", serde_json::to_string(&agreement)?);
    if let Some(out) = &args.out {
        write_json(&out.join("evaluate.json"), &agreement)?;
        RunManifest::new("evaluate", args, None, vec!["evaluate.json"], elapsed_ms(start))?.write(out)?;
    }
    Ok(())
}

enum Centers {
    Sampled(PopulationCenters),
    Model(ClusterModel),
}

fn read_centers(path: &Path) -> Result<Centers> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let centers = PopulationCenters::read_csv(file).with_context(|| format!("reading {}", path.display()))?;
        return Ok(Centers::Sampled(centers));
    }
    let value: serde_json::Value = read_json(path)?;
    if value.get("result").is_some() {
        let report: FitReport = serde_json::from_value(value).with_context(|| format!("reading {}", path.display()))?;
        Ok(Centers::Model(report.result.model))
    } else {
        let centers: PopulationCenters =
            serde_json::from_value(value).with_context(|| format!("reading {}", path.display()))?;
        Ok(Centers::Sampled(centers))
    }
}

#[derive(Debug, Serialize)]
struct CenterDistance {
    hausdorff: f64,
    grid_points: usize,
}

pub fn center_distance(args: &CenterDistanceArgs) -> Result<()> {
    let start = Instant::now();
    let a = read_centers(&args.a)?;
    let b = read_centers(&args.b)?;
    let grid = match (&a, &b) {
        (Centers::Sampled(x), Centers::Sampled(y)) => {
            if x.grid != y.grid {
                bail!(FkmError::DimensionMismatch("center files use different grids".into()));
            }
            x.grid.clone()
        }
        (Centers::Sampled(x), _) | (_, Centers::Sampled(x)) => x.grid.clone(),
        (Centers::Model(m), _) => {
            if args.grid < 2 {
                bail!(FkmError::InvalidConfig("grid needs at least two points".into()));
            }
            uniform_grid(args.grid)
                .into_iter()
                .map(|u| m.transform.from_unit(u))
                .collect()
        }
    };
    let sample = |c: Centers| -> Result<Vec<Vec<f64>>> {
        Ok(match c {
            Centers::Sampled(s) => s.curves,
            Centers::Model(m) => m.evaluate_centers(&grid)?,
        })
    };
    let distance = CenterDistance {
        hausdorff: hausdorff_sampled(&sample(a)?, &sample(b)?)?,
        grid_points: grid.len(),
    };
    println!("{}", serde_json::to_string(&distance)?);
    if let Some(out) = &args.out {
        write_json(&out.join("center_distance.json"), &distance)?;
        RunManifest::new(
            "center-distance",
            args,
            None,
            vec!["center_distance.json"],
            elapsed_ms(start),
        )?
        .write(out)?;
    }
    Ok(())
}

pub fn select_lambda(args: &SelectLambdaArgs) -> Result<()> {
    let start = Instant::now();
    let ds = load(&args.data)?;
    let base = fit_config(&args.model, &[0.0], args.restarts, args.seed);
    let selection = selection::select_lambda(&ds, &base, &args.candidates, args.replicates, args.seed)?;
    write_json(&args.out.join("selection.json"), &selection)?;
    RunManifest::new(
        "select-lambda",
        args,
        Some(args.seed),
        vec!["selection.json"],
        elapsed_ms(start),
    )?
    .write(&args.out)?;
    for (l, s) in selection.candidates.iter().zip(&selection.instability) {
        println!("lambda={l} instability={s}");
    }
    println!("chosen={}", selection.chosen);
    Ok(())
}

pub fn population_centers(args: &PopulationCentersArgs) -> Result<()> {
    let start = Instant::now();
    if args.restarts == 0 {
        bail!(FkmError::InvalidConfig("restarts must be positive".into()));
    }
    if args.nlarge < 1000 || args.nlarge % 2 != 0 || args.grid < 100 {
        bail!(FkmError::InvalidConfig(format!(
            "need an even population of at least 1000 and a grid of at least 100, got {} and {}",
            args.nlarge, args.grid
        )));
    }
    let centers =
        fkm_core::simulation::population_centers_with(args.nlarge, args.grid, args.seed, args.restarts)?;
    centers.write_csv(create(&args.out.join("centers.csv"))?)?;
    RunManifest::new(
        "population-centers",
        args,
        Some(args.seed),
        vec!["centers.csv"],
        elapsed_ms(start),
    )?
    .write(&args.out)?;
    println!("grid={} curves={}", centers.grid.len(), centers.curves.len());
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let start = Instant::now();
    let population = args
        .population
        .as_ref()
        .map(|p| -> Result<PopulationCenters> {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Ok(PopulationCenters::read_csv(file)?)
        })
        .transpose()?;
    let mut summaries: Vec<CellSummary> = Vec::new();
    for &n in &args.n {
        for &n_tp in &args.ntp {
            for &sigma in &args.sigma {
                let mut cell = BenchmarkCell::new(n, n_tp, sigma, args.restarts, args.reps, args.seed);
                cell.basis = args.basis;
                cell.nbasis = args.nbasis;
                cell.lambda = args.lambda;
                let s = run_cell(&cell, population.as_ref())?;
                println!(
                    "n={n} ntp={n_tp} sigma={sigma} mean_ccr={:.2} mean_ari={:.4} median_hausdorff={}",
                    s.mean_ccr,
                    s.mean_ari,
                    fmt_opt(s.median_hausdorff)
                );
                summaries.push(s);
            }
        }
    }

    let mut summary = csv::Writer::from_writer(create(&args.out.join("summary.csv"))?);
    summary.write_record([
        "n",
        "ntp",
        "sigma",
        "reps",
        "mean_ccr",
        "median_ccr",
        "mean_ari",
        "median_ari",
        "median_hausdorff",
        "median_elapsed_ms",
    ])?;
    let mut reps = csv::Writer::from_writer(create(&args.out.join("reps.csv"))?);
    reps.write_record([
        "n",
        "ntp",
        "sigma",
        "rep",
        "ccr",
        "ari",
        "empirical_loss",
        "iterations",
        "converged",
        "hausdorff",
        "elapsed_ms",
    ])?;
    for s in &summaries {
        let c = &s.cell;
        summary.write_record([
            c.n.to_string(),
            c.n_tp.to_string(),
            c.sigma.to_string(),
            c.reps.to_string(),
            s.mean_ccr.to_string(),
            s.median_ccr.to_string(),
            s.mean_ari.to_string(),
            s.median_ari.to_string(),
            fmt_opt(s.median_hausdorff),
            s.median_elapsed_ms.to_string(),
        ])?;
        for r in &s.reps {
            reps.write_record([
                c.n.to_string(),
                c.n_tp.to_string(),
                c.sigma.to_string(),
                r.rep.to_string(),
                r.ccr.to_string(),
                r.ari.to_string(),
                r.empirical_loss.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                fmt_opt(r.hausdorff),
                r.elapsed_ms.to_string(),
            ])?;
        }
    }
    summary.flush()?;
    reps.flush()?;
    write_json(&args.out.join("benchmark.json"), &summaries)?;
    RunManifest::new(
        "benchmark",
        args,
        Some(args.seed),
        vec!["benchmark.json", "summary.csv", "reps.csv"],
        elapsed_ms(start),
    )?
    .write(&args.out)?;
    Ok(())
}
