//! Functional k-means (FKM) for sparsely observed longitudinal data.
//!
//! Cluster centers are expanded in a Fourier or B-spline basis and fit by
//! roughness-penalized weighted least squares on the pooled observations of
//! each cluster; subjects are reassigned to the center closest at their own
//! observation times, and the two steps alternate until the partition is
//! stable. Around the solver sit a simulation harness for the two-cluster
//! benchmark design, clustering metrics, and stability-based selection of
//! the smoothing parameter.

pub mod basis;
pub mod benchmark;
pub mod dataset;
pub mod error;
pub mod fkm;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod quadrature;
pub mod rng;
pub mod selection;
pub mod simulation;

pub use basis::{BasisKind, BasisSpec, BasisSystem, PenaltyMatrix};
pub use dataset::{CsvColumns, SparseFunctionalDataset, SubjectRecord, TimeTransform};
pub use error::{FkmError, Result};
pub use fkm::{
    assign_subjects, empirical_loss, fit, fit_once, penalized_objective, random_initial_assignment,
    update_centers, Assignment, ClusterModel, FitConfig, FitResult, WeightScheme,
};
pub use metrics::{adjusted_rand_index, ccr, hausdorff_centers, hausdorff_sampled, ConfusionTable};
pub use selection::{select_lambda, LambdaSelection};
pub use simulation::{generate, mean_curve, population_centers, PopulationCenters, SimConfig};
