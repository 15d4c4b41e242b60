//! The alternating FKM solver.
//!
//! Each cluster center is `f_k(t) = β_kᵀφ(t)`. Given a partition, `β_k`
//! minimizes the weighted residual sum of squares over every observation of
//! every member subject plus `λ_k ∫ (f_k'')²`; given centers, each subject
//! moves to the center with the smallest residual sum of squares at its own
//! observation times. Restarts from random partitions are run independently
//! and the solution with the lowest empirical loss is kept.
//!
//! Functions taking a [`ClusterModel`] expect data in the model's original
//! time units and map times through the model's [`TimeTransform`];
//! [`update_centers`] works directly on data already rescaled to `[0, 1]`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, BasisSpec, BasisSystem, DEFAULT_SPLINE_ORDER};
use crate::dataset::{SparseFunctionalDataset, SubjectRecord, TimeTransform};
use crate::error::{FkmError, Result};
use crate::linalg::{min_norm_lstsq, RANK_TOLERANCE};
use crate::rng;

/// Consecutive negligible-improvement iterations that count as converged.
const STALL_LIMIT: usize = 3;
const STALL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// Each subject carries total weight one: `w_i = 1 / N_i`.
    #[default]
    Subj,
    /// Each observation carries the same weight `1 / N̄`, `N̄` the mean
    /// number of observations per subject.
    Obs,
}

impl std::str::FromStr for WeightScheme {
    type Err = FkmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "subj" => Ok(WeightScheme::Subj),
            "obs" => Ok(WeightScheme::Obs),
            other => Err(FkmError::InvalidConfig(format!("unknown weight scheme `{other}`"))),
        }
    }
}

impl WeightScheme {
    /// Per-subject observation weights for `ds`.
    pub fn weights(&self, ds: &SparseFunctionalDataset) -> Vec<f64> {
        match self {
            WeightScheme::Subj => ds
                .subjects()
                .iter()
                .map(|s| 1.0 / s.len() as f64)
                .collect(),
            WeightScheme::Obs => {
                let mean = ds.total_observations() as f64 / ds.n() as f64;
                vec![1.0 / mean; ds.n()]
            }
        }
    }
}

/// Cluster labels, `0..k`. Serialized one-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(FkmError::InvalidConfig(format!(
                "label {bad} out of range for {k} clusters"
            )));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Members of cluster `k`, in subject order.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == k)
            .collect()
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l + 1).collect()
    }
}

impl From<Assignment> for Vec<usize> {
    fn from(a: Assignment) -> Self {
        a.one_based()
    }
}

impl TryFrom<Vec<usize>> for Assignment {
    type Error = FkmError;

    fn try_from(one_based: Vec<usize>) -> Result<Self> {
        if one_based.contains(&0) {
            return Err(FkmError::InvalidConfig("labels are one-based".into()));
        }
        let k = one_based.iter().copied().max().unwrap_or(0);
        Assignment::new(one_based.into_iter().map(|l| l - 1).collect(), k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub basis: BasisSystem,
    pub coefficients: Vec<Vec<f64>>,
    pub transform: TimeTransform,
}

impl ClusterModel {
    pub fn new(
        basis: BasisSystem,
        coefficients: Vec<Vec<f64>>,
        transform: TimeTransform,
    ) -> Result<Self> {
        let model = Self {
            basis,
            coefficients,
            transform,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        if self.coefficients.is_empty() {
            return Err(FkmError::InvalidConfig("model has no clusters".into()));
        }
        for (k, beta) in self.coefficients.iter().enumerate() {
            if beta.len() != self.basis.m() {
                return Err(FkmError::DimensionMismatch(format!(
                    "center {k} has {} coefficients, basis has {}",
                    beta.len(),
                    self.basis.m()
                )));
            }
            if beta.iter().any(|b| !b.is_finite()) {
                return Err(FkmError::Numeric(format!("center {k} is not finite")));
            }
        }
        Ok(())
    }

    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    /// `f_k(u)` at a time `u` already on `[0, 1]`.
    pub fn center_value_unit(&self, k: usize, u: f64) -> Result<f64> {
        let phi = self.basis.evaluate(u)?;
        Ok(dot(&phi, &self.coefficients[k]))
    }

    /// Values of every center on `grid` (original time units); one curve
    /// per cluster.
    pub fn evaluate_centers(&self, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut curves = vec![Vec::with_capacity(grid.len()); self.k()];
        for &t in grid {
            let phi = self.basis.evaluate(self.transform.to_unit_checked(t)?)?;
            for (curve, beta) in curves.iter_mut().zip(&self.coefficients) {
                curve.push(dot(&phi, beta));
            }
        }
        Ok(curves)
    }

    /// Unweighted residual sum of squares of `subject` against each center.
    pub fn subject_distances(&self, subject: &SubjectRecord) -> Result<Vec<f64>> {
        let prepared = PreparedSubject::new(subject, &self.basis, &self.transform, 1.0)?;
        let betas = self.beta_vectors();
        Ok(betas.iter().map(|b| prepared.rss(b)).collect())
    }

    /// Label (zero-based) of the closest center; ties go to the lowest index.
    pub fn predict(&self, subject: &SubjectRecord) -> Result<usize> {
        if subject.is_empty() {
            return Err(FkmError::EmptyData(format!("subject `{}` has no observations", subject.id)));
        }
        Ok(argmin(&self.subject_distances(subject)?))
    }

    fn beta_vectors(&self) -> Vec<DVector<f64>> {
        self.coefficients
            .iter()
            .map(|b| DVector::from_column_slice(b))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub k: usize,
    pub basis: BasisSpec,
    /// One value shared by all clusters, or one per cluster.
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub weight_scheme: WeightScheme,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(k: usize, kind: BasisKind, m: usize) -> Self {
        Self {
            k,
            basis: BasisSpec {
                kind,
                m,
                order: (kind == BasisKind::BSpline).then_some(DEFAULT_SPLINE_ORDER),
                knots: None,
            },
            lambdas: vec![0.0],
            weight_scheme: WeightScheme::Subj,
            restarts: 1,
            max_iter: 100,
            seed: 0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambdas = vec![lambda];
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_weights(mut self, scheme: WeightScheme) -> Self {
        self.weight_scheme = scheme;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// Validates and expands the smoothing parameters to one per cluster.
    pub fn cluster_lambdas(&self) -> Result<Vec<f64>> {
        if self.k < 1 {
            return Err(FkmError::InvalidConfig("need at least one cluster".into()));
        }
        if self.restarts < 1 {
            return Err(FkmError::InvalidConfig("need at least one restart".into()));
        }
        if self.max_iter < 1 {
            return Err(FkmError::InvalidConfig("max_iter must be positive".into()));
        }
        expand_lambdas(&self.lambdas, self.k)
    }

    pub fn build_basis(&self) -> Result<BasisSystem> {
        BasisSystem::try_from(self.basis.clone())
    }
}

fn expand_lambdas(lambdas: &[f64], k: usize) -> Result<Vec<f64>> {
    if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(FkmError::InvalidConfig(format!(
            "smoothing parameters must be finite and nonnegative, got {bad}"
        )));
    }
    match lambdas.len() {
        1 => Ok(vec![lambdas[0]; k]),
        n if n == k => Ok(lambdas.to_vec()),
        n => Err(FkmError::InvalidConfig(format!(
            "got {n} smoothing parameters for {k} clusters"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ClusterModel,
    pub assignment: Assignment,
    pub empirical_loss: f64,
    pub penalized_objective: f64,
    pub iterations: usize,
    pub restart_index: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    /// Final empirical loss of every restart, in restart order.
    #[serde(default)]
    pub restart_losses: Vec<f64>,
}

struct PreparedSubject {
    design: DMatrix<f64>,
    values: DVector<f64>,
    weight: f64,
}

impl PreparedSubject {
    fn new(
        subject: &SubjectRecord,
        basis: &BasisSystem,
        transform: &TimeTransform,
        weight: f64,
    ) -> Result<Self> {
        let unit: Vec<f64> = subject
            .times
            .iter()
            .map(|&t| transform.to_unit_checked(t))
            .collect::<Result<_>>()?;
        Ok(Self {
            design: basis.design_matrix(&unit)?,
            values: DVector::from_column_slice(&subject.values),
            weight,
        })
    }

    fn rss(&self, beta: &DVector<f64>) -> f64 {
        let mut total = 0.0;
        for (j, &x) in self.values.iter().enumerate() {
            let fitted = self.design.row(j).transpose().dot(beta);
            total += (x - fitted) * (x - fitted);
        }
        total
    }
}

/// Data, weights and penalty in the form the alternating steps consume.
struct Problem {
    subjects: Vec<PreparedSubject>,
    m: usize,
    lambdas: Vec<f64>,
    penalty: Option<DMatrix<f64>>,
    penalty_root: Option<DMatrix<f64>>,
}

impl Problem {
    fn new(
        ds: &SparseFunctionalDataset,
        basis: &BasisSystem,
        transform: &TimeTransform,
        lambdas: Vec<f64>,
        scheme: WeightScheme,
    ) -> Result<Self> {
        ds.validate()?;
        let weights = scheme.weights(ds);
        let subjects = ds
            .subjects()
            .iter()
            .zip(weights)
            .map(|(s, w)| PreparedSubject::new(s, basis, transform, w))
            .collect::<Result<Vec<_>>>()?;
        let (penalty, penalty_root) = if lambdas.iter().any(|&l| l > 0.0) {
            let p = basis.roughness()?;
            (Some(p.matrix().clone()), Some(p.root()))
        } else {
            (None, None)
        };
        Ok(Self {
            subjects,
            m: basis.m(),
            lambdas,
            penalty,
            penalty_root,
        })
    }

    fn k(&self) -> usize {
        self.lambdas.len()
    }

    fn check_assignment(&self, assignment: &Assignment) -> Result<()> {
        if assignment.len() != self.subjects.len() {
            return Err(FkmError::DimensionMismatch(format!(
                "assignment has {} labels for {} subjects",
                assignment.len(),
                self.subjects.len()
            )));
        }
        if assignment.k() != self.k() {
            return Err(FkmError::DimensionMismatch(format!(
                "assignment has {} clusters, expected {}",
                assignment.k(),
                self.k()
            )));
        }
        Ok(())
    }

    fn check_centers(&self, betas: &[DVector<f64>]) -> Result<()> {
        if betas.len() != self.k() {
            return Err(FkmError::DimensionMismatch(format!(
                "{} centers for {} clusters",
                betas.len(),
                self.k()
            )));
        }
        Ok(())
    }

    /// Penalized weighted least-squares fit of every center.
    fn update(&self, labels: &[usize]) -> Result<Vec<DVector<f64>>> {
        (0..self.k()).map(|k| self.update_one(labels, k)).collect()
    }

    fn update_one(&self, labels: &[usize], k: usize) -> Result<DVector<f64>> {
        let members: Vec<&PreparedSubject> = labels
            .iter()
            .zip(&self.subjects)
            .filter(|(&l, _)| l == k)
            .map(|(_, s)| s)
            .collect();
        let n_obs: usize = members.iter().map(|s| s.values.len()).sum();
        if n_obs == 0 {
            return Err(FkmError::EmptyCluster(k));
        }
        let lambda = self.lambdas[k];
        let extra = if lambda > 0.0 { self.m } else { 0 };
        let mut a = DMatrix::zeros(n_obs + extra, self.m);
        let mut b = DVector::zeros(n_obs + extra);
        let mut row = 0;
        for s in members {
            let sw = s.weight.sqrt();
            let rows = s.values.len();
            a.rows_mut(row, rows).copy_from(&(&s.design * sw));
            b.rows_mut(row, rows).copy_from(&(&s.values * sw));
            row += rows;
        }
        if lambda > 0.0 {
            let root = self
                .penalty_root
                .as_ref()
                .expect("penalty root prepared whenever a smoothing parameter is positive");
            a.rows_mut(row, self.m).copy_from(&(root * lambda.sqrt()));
        }
        let beta = min_norm_lstsq(&a, &b, RANK_TOLERANCE);
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(FkmError::Numeric(format!("center {k} update is not finite")));
        }
        Ok(beta)
    }

    /// Unweighted residual sums of squares, `[subject][cluster]`.
    fn distances(&self, betas: &[DVector<f64>]) -> Vec<Vec<f64>> {
        self.subjects
            .iter()
            .map(|s| betas.iter().map(|b| s.rss(b)).collect())
            .collect()
    }

    fn penalty_total(&self, betas: &[DVector<f64>]) -> f64 {
        betas
            .iter()
            .zip(&self.lambdas)
            .filter(|(_, &l)| l > 0.0)
            .map(|(b, &l)| {
                let r = self.penalty.as_ref().expect("penalty prepared");
                l * b.dot(&(r * b))
            })
            .sum()
    }

    fn objective(&self, labels: &[usize], betas: &[DVector<f64>]) -> f64 {
        let data: f64 = labels
            .iter()
            .zip(&self.subjects)
            .map(|(&l, s)| s.weight * s.rss(&betas[l]))
            .sum();
        data + self.penalty_total(betas)
    }

    fn empirical_loss(&self, betas: &[DVector<f64>]) -> f64 {
        let total: f64 = self
            .subjects
            .iter()
            .map(|s| {
                s.weight
                    * betas
                        .iter()
                        .map(|b| s.rss(b))
                        .fold(f64::INFINITY, f64::min)
            })
            .sum();
        total / self.subjects.len() as f64
    }

    /// Moves the worst-fitting subject of a multi-member cluster into each
    /// empty cluster.
    fn repair_empty(&self, labels: &mut [usize], dist: &[Vec<f64>]) {
        let k = self.k();
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        for target in 0..k {
            if sizes[target] > 0 {
                continue;
            }
            let mut pick: Option<(usize, f64)> = None;
            for (i, &l) in labels.iter().enumerate() {
                if sizes[l] < 2 {
                    continue;
                }
                let loss = self.subjects[i].weight * dist[i][l];
                if pick.is_none_or(|(_, best)| loss > best) {
                    pick = Some((i, loss));
                }
            }
            if let Some((i, _)) = pick {
                sizes[labels[i]] -= 1;
                labels[i] = target;
                sizes[target] += 1;
            }
        }
    }

    fn run(&self, init: &Assignment, max_iter: usize) -> Result<RunOutcome> {
        self.check_assignment(init)?;
        if let Some(k) = init.sizes().iter().position(|&s| s == 0) {
            return Err(FkmError::InvalidConfig(format!(
                "initial assignment leaves cluster {} empty",
                k + 1
            )));
        }
        let mut labels = init.labels().to_vec();
        let mut trace = Vec::new();
        let mut converged = false;
        let mut stalled = 0;
        let mut betas;
        let mut next;
        loop {
            betas = self.update(&labels)?;
            let objective = self.objective(&labels, &betas);
            if let Some(&prev) = trace.last() {
                let prev: f64 = prev;
                if prev - objective < STALL_TOLERANCE * (1.0 + objective.abs()) {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
            }
            trace.push(objective);

            let dist = self.distances(&betas);
            next = dist.iter().map(|d| argmin(d)).collect::<Vec<_>>();
            self.repair_empty(&mut next, &dist);

            if next == labels || stalled >= STALL_LIMIT {
                converged = true;
                break;
            }
            if trace.len() >= max_iter {
                break;
            }
            labels = next.clone();
        }
        let empirical_loss = self.empirical_loss(&betas);
        let objective = self.objective(&next, &betas);
        Ok(RunOutcome {
            betas,
            labels: next,
            empirical_loss,
            objective,
            converged,
            trace,
        })
    }
}

struct RunOutcome {
    betas: Vec<DVector<f64>>,
    labels: Vec<usize>,
    empirical_loss: f64,
    objective: f64,
    converged: bool,
    trace: Vec<f64>,
}

impl RunOutcome {
    fn into_result(
        self,
        basis: &BasisSystem,
        transform: TimeTransform,
        restart_index: usize,
    ) -> Result<FitResult> {
        let k = self.betas.len();
        let model = ClusterModel::new(
            basis.clone(),
            self.betas.iter().map(|b| b.iter().copied().collect()).collect(),
            transform,
        )?;
        Ok(FitResult {
            model,
            assignment: Assignment::new(self.labels, k)?,
            empirical_loss: self.empirical_loss,
            penalized_objective: self.objective,
            iterations: self.trace.len(),
            restart_index,
            converged: self.converged,
            objective_trace: self.trace,
            restart_losses: Vec::new(),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the smallest entry; the first one wins ties.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn model_problem(
    ds: &SparseFunctionalDataset,
    model: &ClusterModel,
    lambdas: Vec<f64>,
    scheme: WeightScheme,
) -> Result<Problem> {
    model.check()?;
    Problem::new(ds, &model.basis, &model.transform, lambdas, scheme)
}

/// Mean over subjects of the weighted residual sum of squares to the
/// closest center.
pub fn empirical_loss(
    ds: &SparseFunctionalDataset,
    model: &ClusterModel,
    scheme: WeightScheme,
) -> Result<f64> {
    let problem = model_problem(ds, model, vec![0.0; model.k()], scheme)?;
    Ok(problem.empirical_loss(&model.beta_vectors()))
}

/// Weighted within-cluster residual sum of squares under `assignment` plus
/// the roughness penalties `Σ_k λ_k β_kᵀRβ_k`.
pub fn penalized_objective(
    ds: &SparseFunctionalDataset,
    model: &ClusterModel,
    assignment: &Assignment,
    lambdas: &[f64],
    scheme: WeightScheme,
) -> Result<f64> {
    let lambdas = expand_lambdas(lambdas, model.k())?;
    let problem = model_problem(ds, model, lambdas, scheme)?;
    problem.check_assignment(assignment)?;
    Ok(problem.objective(assignment.labels(), &model.beta_vectors()))
}

/// Center coefficients for a fixed partition. `ds` must already be on
/// `[0, 1]`; every cluster needs at least one observation.
pub fn update_centers(
    ds: &SparseFunctionalDataset,
    assignment: &Assignment,
    basis: &BasisSystem,
    lambdas: &[f64],
    scheme: WeightScheme,
) -> Result<Vec<Vec<f64>>> {
    let lambdas = expand_lambdas(lambdas, assignment.k())?;
    let problem = Problem::new(ds, basis, &TimeTransform::identity(), lambdas, scheme)?;
    problem.check_assignment(assignment)?;
    let betas = problem.update(assignment.labels())?;
    Ok(betas.iter().map(|b| b.iter().copied().collect()).collect())
}

/// Closest center for every subject by unweighted residual sum of squares.
pub fn assign_subjects(ds: &SparseFunctionalDataset, model: &ClusterModel) -> Result<Assignment> {
    let problem = model_problem(ds, model, vec![0.0; model.k()], WeightScheme::Subj)?;
    let betas = model.beta_vectors();
    problem.check_centers(&betas)?;
    let labels = problem.distances(&betas).iter().map(|d| argmin(d)).collect();
    Assignment::new(labels, model.k())
}

/// Uniform random labels, then each empty cluster takes one subject drawn
/// uniformly from the clusters that can spare one.
pub fn random_initial_assignment<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Assignment> {
    if k < 1 {
        return Err(FkmError::InvalidConfig("need at least one cluster".into()));
    }
    if n < k {
        return Err(FkmError::TooFewSubjects { needed: k, have: n });
    }
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    for target in 0..k {
        if sizes[target] > 0 {
            continue;
        }
        let donors: Vec<usize> = (0..n).filter(|&i| sizes[labels[i]] > 1).collect();
        let i = donors[rng.random_range(0..donors.len())];
        sizes[labels[i]] -= 1;
        labels[i] = target;
        sizes[target] += 1;
    }
    Assignment::new(labels, k)
}

fn prepare(ds: &SparseFunctionalDataset, config: &FitConfig) -> Result<(Problem, BasisSystem, TimeTransform)> {
    let lambdas = config.cluster_lambdas()?;
    let basis = config.build_basis()?;
    let (lo, hi) = ds.domain();
    let transform = TimeTransform::new(lo, hi)?;
    let problem = Problem::new(ds, &basis, &transform, lambdas, config.weight_scheme)?;
    Ok((problem, basis, transform))
}

/// One run of the alternating algorithm from `init`.
pub fn fit_once(ds: &SparseFunctionalDataset, config: &FitConfig, init: &Assignment) -> Result<FitResult> {
    let (problem, basis, transform) = prepare(ds, config)?;
    let mut result = problem
        .run(init, config.max_iter)?
        .into_result(&basis, transform, 0)?;
    result.restart_losses = vec![result.empirical_loss];
    Ok(result)
}

/// Initial partition used by restart `restart` under `seed`.
pub fn restart_init(n: usize, k: usize, seed: u64, restart: usize) -> Result<Assignment> {
    let mut rng = rng::stream(seed, &[restart as u64]);
    random_initial_assignment(n, k, &mut rng)
}

/// Runs `config.restarts` random restarts and keeps the lowest empirical
/// loss (earliest restart on ties). Restarts run on the current rayon pool;
/// the result does not depend on its size.
pub fn fit(ds: &SparseFunctionalDataset, config: &FitConfig) -> Result<FitResult> {
    let (problem, basis, transform) = prepare(ds, config)?;
    let n = ds.n();
    if n < config.k {
        return Err(FkmError::TooFewSubjects {
            needed: config.k,
            have: n,
        });
    }
    let outcomes: Vec<Result<RunOutcome>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let init = restart_init(n, config.k, config.seed, r)?;
            problem.run(&init, config.max_iter)
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let restart_losses: Vec<f64> = outcomes.iter().map(|o| o.empirical_loss).collect();
    let best = argmin(&restart_losses);
    let outcome = outcomes
        .into_iter()
        .nth(best)
        .expect("at least one restart");
    let mut result = outcome.into_result(&basis, transform, best)?;
    result.restart_losses = restart_losses;
    Ok(result)
}

/// [`fit`] plus its wall-clock duration in milliseconds.
pub fn fit_timed(ds: &SparseFunctionalDataset, config: &FitConfig) -> Result<(FitResult, f64)> {
    let start = Instant::now();
    let result = fit(ds, config)?;
    Ok((result, start.elapsed().as_secs_f64() * 1e3))
}
