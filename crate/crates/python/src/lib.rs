//! Python bindings for the `fkm_core` clustering library.
//!
//! Labels cross the boundary zero-based. Heavy calls release the GIL.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use fkm_core as core;
use fkm_core::{BasisKind, CsvColumns, FitConfig, FkmError, SubjectRecord, WeightScheme};

create_exception!(pyfkm, FkmException, PyException);

fn to_py(err: FkmError) -> PyErr {
    FkmException::new_err(format!("[{}] {}", err.kind(), err))
}

fn basis_kind(s: &str) -> PyResult<BasisKind> {
    s.parse().map_err(to_py)
}

fn weight_scheme(s: &str) -> PyResult<WeightScheme> {
    s.parse().map_err(to_py)
}

/// Sparse longitudinal data: a set of subjects, each observed at a few
/// time points.
#[pyclass(module = "pyfkm", frozen)]
pub struct Dataset {
    inner: core::SparseFunctionalDataset,
}

#[pymethods]
impl Dataset {
    /// Builds a dataset from long-format columns. `domain` defaults to the
    /// observed time range.
    #[new]
    #[pyo3(signature = (ids, times, values, domain=None))]
    fn new(
        ids: Vec<String>,
        times: Vec<f64>,
        values: Vec<f64>,
        domain: Option<(f64, f64)>,
    ) -> PyResult<Self> {
        if ids.len() != times.len() || ids.len() != values.len() {
            return Err(to_py(FkmError::DimensionMismatch(
                "ids, times and values must have equal length".into(),
            )));
        }
        let mut slots = std::collections::HashMap::new();
        let mut subjects: Vec<SubjectRecord> = Vec::new();
        for ((id, t), x) in ids.into_iter().zip(times).zip(values) {
            let slot = *slots.entry(id.clone()).or_insert_with(|| {
                subjects.push(SubjectRecord::new(id, Vec::new(), Vec::new()));
                subjects.len() - 1
            });
            subjects[slot].times.push(t);
            subjects[slot].values.push(x);
        }
        let inner = match domain {
            Some((lo, hi)) => core::SparseFunctionalDataset::with_domain(subjects, lo, hi),
            None => core::SparseFunctionalDataset::new(subjects),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, id_col="id", time_col="time", value_col="value"))]
    fn from_csv(path: &str, id_col: &str, time_col: &str, value_col: &str) -> PyResult<Self> {
        let cols = CsvColumns {
            subject: id_col.into(),
            time: time_col.into(),
            value: value_col.into(),
        };
        let inner = core::SparseFunctionalDataset::load_csv(path, &cols).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| to_py(e.into()))?;
        self.inner.write_csv(file).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().map(str::to_owned).collect()
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    #[getter]
    fn total_observations(&self) -> usize {
        self.inner.total_observations()
    }

    /// `(times, values)` of subject `i`, sorted by time.
    fn subject(&self, i: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let s = self.inner.subjects().get(i).ok_or_else(|| {
            pyo3::exceptions::PyIndexError::new_err(format!("subject index {i} out of range"))
        })?;
        Ok((s.times.clone(), s.values.clone()))
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.domain();
        format!(
            "Dataset(n={}, observations={}, domain=({lo}, {hi}))",
            self.inner.n(),
            self.inner.total_observations()
        )
    }
}

/// Outcome of a multi-restart fit.
#[pyclass(module = "pyfkm", frozen)]
pub struct FitResult {
    inner: core::FitResult,
}

#[pymethods]
impl FitResult {
    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.assignment.labels().to_vec()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.model.k()
    }

    #[getter]
    fn empirical_loss(&self) -> f64 {
        self.inner.empirical_loss
    }

    #[getter]
    fn penalized_objective(&self) -> f64 {
        self.inner.penalized_objective
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn restart_index(&self) -> usize {
        self.inner.restart_index
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.inner.objective_trace.clone()
    }

    #[getter]
    fn restart_losses(&self) -> Vec<f64> {
        self.inner.restart_losses.clone()
    }

    /// Basis coefficients, one row per cluster.
    #[getter]
    fn coefficients(&self) -> Vec<Vec<f64>> {
        self.inner.model.coefficients.clone()
    }

    /// Center curves on `grid` (original time units), one list per cluster.
    fn evaluate_centers(&self, grid: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        self.inner.model.evaluate_centers(&grid).map_err(to_py)
    }

    /// Nearest-center label of every subject in `data`.
    fn predict(&self, data: &Dataset) -> PyResult<Vec<usize>> {
        data.inner
            .subjects()
            .iter()
            .map(|s| self.inner.model.predict(s))
            .collect::<core::Result<Vec<_>>>()
            .map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner)
            .map_err(|e| FkmException::new_err(format!("[json] {e}")))
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(k={}, loss={}, iterations={}, converged={})",
            self.inner.model.k(),
            self.inner.empirical_loss,
            self.inner.iterations,
            self.inner.converged
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    k: usize,
    basis: &str,
    nbasis: usize,
    order: Option<usize>,
    lam: Vec<f64>,
    weights: &str,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> PyResult<FitConfig> {
    let mut config = FitConfig::new(k, basis_kind(basis)?, nbasis)
        .with_restarts(restarts)
        .with_max_iter(max_iter)
        .with_seed(seed)
        .with_weights(weight_scheme(weights)?);
    config.basis.order = order;
    config.lambdas = lam;
    Ok(config)
}

/// Functional k-means with `restarts` random initial partitions. `lam` is
/// one smoothing parameter or one per cluster.
#[pyfunction]
#[pyo3(signature = (data, k, basis="fourier", nbasis=15, order=None, lam=vec![0.0], weights="subj", restarts=100, max_iter=100, seed=0))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    data: &Dataset,
    k: usize,
    basis: &str,
    nbasis: usize,
    order: Option<usize>,
    lam: Vec<f64>,
    weights: &str,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> PyResult<FitResult> {
    let config = build_config(k, basis, nbasis, order, lam, weights, restarts, max_iter, seed)?;
    let inner = py
        .detach(|| core::fit(&data.inner, &config))
        .map_err(to_py)?;
    Ok(FitResult { inner })
}

/// Stability-based choice of a shared smoothing parameter. Returns a dict
/// with `candidates`, `instability` and `chosen`.
#[pyfunction]
#[pyo3(signature = (data, k, candidates, basis="fourier", nbasis=15, order=None, weights="subj", replicates=20, restarts=10, max_iter=100, seed=0))]
#[allow(clippy::too_many_arguments)]
fn select_lambda<'py>(
    py: Python<'py>,
    data: &Dataset,
    k: usize,
    candidates: Vec<f64>,
    basis: &str,
    nbasis: usize,
    order: Option<usize>,
    weights: &str,
    replicates: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let base = build_config(k, basis, nbasis, order, vec![0.0], weights, restarts, max_iter, seed)?;
    let sel = py
        .detach(|| core::select_lambda(&data.inner, &base, &candidates, replicates, seed))
        .map_err(to_py)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("candidates", sel.candidates)?;
    out.set_item("instability", sel.instability)?;
    out.set_item("chosen", sel.chosen)?;
    Ok(out)
}

/// Synthetic two-cluster dataset; returns `(dataset, true_labels)`.
#[pyfunction]
#[pyo3(signature = (n, ntp, sigma, seed=0))]
fn simulate(n: usize, ntp: u32, sigma: f64, seed: u64) -> PyResult<(Dataset, Vec<usize>)> {
    let (inner, labels) = core::generate(&core::SimConfig::new(n, ntp, sigma, seed)).map_err(to_py)?;
    Ok((Dataset { inner }, labels))
}

/// Noiseless mean curve of cluster 1 or 2 at `t` in `[0, 1]`.
#[pyfunction]
fn mean_curve(cluster: usize, t: f64) -> PyResult<f64> {
    if cluster != 1 && cluster != 2 {
        return Err(to_py(FkmError::InvalidConfig(format!(
            "cluster must be 1 or 2, got {cluster}"
        ))));
    }
    Ok(core::mean_curve(cluster, t))
}

/// Dense k-means centers of the simulation model; returns `(grid, curves)`.
#[pyfunction]
#[pyo3(signature = (nlarge=10_000, grid=400, seed=0))]
fn population_centers(
    py: Python<'_>,
    nlarge: usize,
    grid: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = py
        .detach(|| core::population_centers(nlarge, grid, seed))
        .map_err(to_py)?;
    Ok((p.grid, p.curves))
}

/// Correct classification rate in percent.
#[pyfunction]
fn ccr(truth: Vec<usize>, pred: Vec<usize>) -> PyResult<f64> {
    core::ccr(&truth, &pred).map_err(to_py)
}

#[pyfunction]
fn adjusted_rand_index(truth: Vec<usize>, pred: Vec<usize>) -> PyResult<f64> {
    core::adjusted_rand_index(&truth, &pred).map_err(to_py)
}

/// Hausdorff distance between two sets of curves sampled on one grid.
#[pyfunction]
fn hausdorff(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    core::hausdorff_sampled(&a, &b).map_err(to_py)
}

/// Basis values at `times` (in `[0, 1]`), one row per time.
#[pyfunction]
#[pyo3(signature = (kind, m, times, order=None))]
fn basis_matrix(kind: &str, m: usize, times: Vec<f64>, order: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    let basis = core::BasisSystem::construct(basis_kind(kind)?, m, order).map_err(to_py)?;
    times
        .iter()
        .map(|&t| basis.evaluate(t))
        .collect::<core::Result<Vec<_>>>()
        .map_err(to_py)
}

/// Roughness penalty matrix `∫ φ_a″ φ_b″`.
#[pyfunction]
#[pyo3(signature = (kind, m, order=None))]
fn roughness_matrix(kind: &str, m: usize, order: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    let basis = core::BasisSystem::construct(basis_kind(kind)?, m, order).map_err(to_py)?;
    let r = basis.roughness().map_err(to_py)?.matrix();
    Ok((0..r.nrows())
        .map(|i| r.row(i).iter().copied().collect())
        .collect())
}

#[pymodule]
fn pyfkm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("FkmError", m.py().get_type::<FkmException>())?;
    m.add_class::<Dataset>()?;
    m.add_class::<FitResult>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(select_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(mean_curve, m)?)?;
    m.add_function(wrap_pyfunction!(population_centers, m)?)?;
    m.add_function(wrap_pyfunction!(ccr, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(basis_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(roughness_matrix, m)?)?;
    Ok(())
}
