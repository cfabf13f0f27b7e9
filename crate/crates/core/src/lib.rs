//! Cluster Forests: an ensemble clustering library.
//!
//! The pipeline grows many small feature subsets ("clustering vectors"), each
//! guided by the within/between dispersion ratio kappa, base-clusters every
//! subset with K-means, averages the resulting co-cluster indicators into a
//! co-association matrix, sharpens that matrix with a threshold/exponential
//! regularization, and finally partitions it with normalized-cut spectral
//! clustering.
//!
//! The crate also ships the pieces needed to study the pipeline in isolation:
//! synthetic Gaussian mixture generators, a perturbation lab for planted
//! block affinity matrices, reference baselines (evidence accumulation,
//! random projection ensembles, bagged K-means), and the agreement metrics
//! used to score partitions against ground truth.

pub mod base_cluster;
pub mod baselines;
pub mod data;
pub mod eigen;
pub mod ensemble;
pub mod error;
pub mod growth;
pub mod metrics;
pub mod perturbation;
pub mod rng;
pub mod spectral;

pub use error::{CfError, Result};
