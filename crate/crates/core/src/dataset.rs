//! Sparse longitudinal data: one record per subject, each holding a short
//! series of `(time, value)` observations on a shared time domain.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FkmError, Result};

/// Relative slack allowed when checking that a mapped time lies in `[0, 1]`.
pub(crate) const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SubjectRecord {
    pub fn new(id: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            times,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Stable sort by time; tied times keep their input order.
    fn sort_by_time(&mut self) {
        let mut idx: Vec<usize> = (0..self.times.len()).collect();
        idx.sort_by(|&a, &b| self.times[a].total_cmp(&self.times[b]));
        self.times = idx.iter().map(|&i| self.times[i]).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }
}

/// Affine map from the original time domain `[t_lo, t_hi]` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeTransform {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl TimeTransform {
    pub fn new(t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(t_lo.is_finite() && t_hi.is_finite()) || t_hi <= t_lo {
            return Err(FkmError::DegenerateDomain { lo: t_lo, hi: t_hi });
        }
        Ok(Self { t_lo, t_hi })
    }

    pub fn identity() -> Self {
        Self { t_lo: 0.0, t_hi: 1.0 }
    }

    pub fn span(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn to_unit(&self, t: f64) -> f64 {
        (t - self.t_lo) / self.span()
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        self.t_lo + u * self.span()
    }

    /// Maps `t` to `[0, 1]`, rejecting points outside the domain. Excursions
    /// within rounding slack are clamped.
    pub fn to_unit_checked(&self, t: f64) -> Result<f64> {
        let u = self.to_unit(t);
        if !u.is_finite() || u < -DOMAIN_SLACK || u > 1.0 + DOMAIN_SLACK {
            return Err(FkmError::OutOfDomain {
                t,
                lo: self.t_lo,
                hi: self.t_hi,
            });
        }
        Ok(u.clamp(0.0, 1.0))
    }
}

/// Column names used when reading long-format CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvColumns {
    pub subject: String,
    pub time: String,
    pub value: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self {
            subject: "id".into(),
            time: "time".into(),
            value: "value".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFunctionalDataset {
    subjects: Vec<SubjectRecord>,
    domain: (f64, f64),
}

impl SparseFunctionalDataset {
    /// Builds a dataset whose domain is the observed time range. Observations
    /// are sorted by time within each subject.
    pub fn new(subjects: Vec<SubjectRecord>) -> Result<Self> {
        let (lo, hi) = subjects
            .iter()
            .flat_map(|s| s.times.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                (lo.min(t), hi.max(t))
            });
        let domain = if lo <= hi { (lo, hi) } else { (0.0, 1.0) };
        Self::with_domain(subjects, domain.0, domain.1)
    }

    /// Builds a dataset on an explicit domain, which must contain every time.
    pub fn with_domain(mut subjects: Vec<SubjectRecord>, t_lo: f64, t_hi: f64) -> Result<Self> {
        for s in &mut subjects {
            if s.times.len() == s.values.len() {
                s.sort_by_time();
            }
        }
        let ds = Self {
            subjects,
            domain: (t_lo, t_hi),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Number of subjects.
    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    pub fn total_observations(&self) -> usize {
        self.subjects.iter().map(SubjectRecord::len).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.subjects.iter().map(|s| s.id.as_str())
    }

    /// Checks every structural invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let (lo, hi) = self.domain;
        if self.subjects.is_empty() {
            problems.push("empty dataset".to_string());
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            problems.push(format!("invalid domain [{lo}, {hi}]"));
        }
        for s in &self.subjects {
            if s.times.len() != s.values.len() {
                problems.push(format!(
                    "subject `{}`: {} times but {} values",
                    s.id,
                    s.times.len(),
                    s.values.len()
                ));
                continue;
            }
            if s.is_empty() {
                problems.push(format!("subject `{}`: empty subject", s.id));
            }
            for (j, (&t, &x)) in s.times.iter().zip(&s.values).enumerate() {
                if !t.is_finite() {
                    problems.push(format!("subject `{}` index {j}: non-finite time {t}", s.id));
                } else if t < lo || t > hi {
                    problems.push(format!(
                        "subject `{}` index {j}: time {t} outside [{lo}, {hi}]",
                        s.id
                    ));
                }
                if !x.is_finite() {
                    problems.push(format!("subject `{}` index {j}: non-finite value {x}", s.id));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(FkmError::InvalidDataset(problems))
        }
    }

    /// Rescales times onto `[0, 1]`. Values are untouched.
    pub fn normalize_time(&self) -> Result<(SparseFunctionalDataset, TimeTransform)> {
        let (lo, hi) = self.domain;
        let transform = TimeTransform::new(lo, hi)?;
        let subjects = self
            .subjects
            .iter()
            .map(|s| SubjectRecord {
                id: s.id.clone(),
                times: s
                    .times
                    .iter()
                    .map(|&t| transform.to_unit(t).clamp(0.0, 1.0))
                    .collect(),
                values: s.values.clone(),
            })
            .collect();
        Ok((
            SparseFunctionalDataset {
                subjects,
                domain: (0.0, 1.0),
            },
            transform,
        ))
    }

    /// Restricts the dataset to the given subject indices, keeping the domain.
    pub fn subset(&self, indices: &[usize]) -> SparseFunctionalDataset {
        SparseFunctionalDataset {
            subjects: indices.iter().map(|&i| self.subjects[i].clone()).collect(),
            domain: self.domain,
        }
    }

    pub fn load_csv(path: impl AsRef<Path>, cols: &CsvColumns) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file, cols)
    }

    pub fn read_csv<R: Read>(reader: R, cols: &CsvColumns) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(FkmError::EmptyData("no header row".into()));
        }
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| FkmError::MissingColumn(name.to_string()))
        };
        let (ci, ct, cv) = (find(&cols.subject)?, find(&cols.time)?, find(&cols.value)?);

        let mut index: HashMap<String, usize> = HashMap::new();
        let mut subjects: Vec<SubjectRecord> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let parse = |col: usize, name: &str| -> Result<f64> {
                let raw = record.get(col).unwrap_or("");
                raw.parse::<f64>().map_err(|_| FkmError::Parse {
                    line,
                    column: name.to_string(),
                    value: raw.to_string(),
                })
            };
            let t = parse(ct, &cols.time)?;
            let x = parse(cv, &cols.value)?;
            let id = record.get(ci).unwrap_or("").to_string();
            let slot = *index.entry(id.clone()).or_insert_with(|| {
                subjects.push(SubjectRecord::new(id, Vec::new(), Vec::new()));
                subjects.len() - 1
            });
            subjects[slot].times.push(t);
            subjects[slot].values.push(x);
        }
        if subjects.is_empty() {
            return Err(FkmError::EmptyData("no data rows".into()));
        }
        Self::new(subjects)
    }

    /// Writes long-format CSV with header `id,time,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "time", "value"])?;
        for s in &self.subjects {
            for (t, x) in s.times.iter().zip(&s.values) {
                w.write_record([s.id.as_str(), &t.to_string(), &x.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
