use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// One row of a labels file. Clusters are one-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub id: String,
    pub cluster: usize,
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
}

pub fn write_labels(path: &Path, rows: &[LabelRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<LabelRow>, _>>()
        .with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        bail!(fkm_core::FkmError::EmptyData(format!("{} has no labels", path.display())));
    }
    Ok(rows)
}

/// Aligns `pred` to the subject order of `truth`; both files must label
/// the same subjects exactly once.
pub fn align_labels(truth: &[LabelRow], pred: &[LabelRow]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut by_id = HashMap::with_capacity(pred.len());
    for row in pred {
        if by_id.insert(row.id.as_str(), row.cluster).is_some() {
            bail!(invalid(format!("subject `{}` labeled twice", row.id)));
        }
    }
    if by_id.len() != truth.len() {
        bail!(invalid(format!(
            "label files cover {} and {} subjects",
            truth.len(),
            by_id.len()
        )));
    }
    let mut a = Vec::with_capacity(truth.len());
    let mut b = Vec::with_capacity(truth.len());
    for row in truth {
        match by_id.get(row.id.as_str()) {
            Some(&c) => {
                a.push(row.cluster);
                b.push(c);
            }
            None => bail!(invalid(format!("subject `{}` missing from predictions", row.id))),
        }
    }
    Ok((a, b))
}

fn invalid(msg: String) -> fkm_core::FkmError {
    fkm_core::FkmError::InvalidDataset(vec![msg])
}

/// Reproducibility record written next to every command's artifacts.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<&'a str>,
    pub wall_clock_ms: f64,
}

impl<'a> RunManifest<'a> {
    pub fn new<C: Serialize>(
        subcommand: &'static str,
        config: &C,
        seed: Option<u64>,
        artifacts: Vec<&'a str>,
        wall_clock_ms: f64,
    ) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            config: serde_json::to_value(config)?,
            seed,
            artifacts,
            wall_clock_ms,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}
