//! Robust centroid clustering for contaminated Gaussian mixtures.
//!
//! The library provides three iterative clustering algorithms that share one
//! engine ([`algorithms`]): Lloyd k-means, k-medians with ℓ1 labeling, and
//! k-medians-hybrid, which labels with the Euclidean distance and estimates
//! centroids with the coordinatewise median. Around them sit a synthetic data
//! generator ([`datagen`]), scoring ([`metrics`]) and a Monte-Carlo harness
//! ([`experiments`]) that compares the algorithms under outlier contamination.

pub mod algorithms;
pub mod cli;
pub mod config;
pub mod datagen;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod points;
pub mod seed;
pub mod stats;

pub use algorithms::{Algorithm, AlgorithmSpec, ClusteringResult, Estimator, InitStrategy, RunConfig};
pub use datagen::{Dataset, MixtureConfig, OutlierConfig, Truth};
pub use error::{Error, Result};
pub use points::PointSet;
pub use stats::Metric;
