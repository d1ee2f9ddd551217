//! Intrinsic dimensionality of point clouds and of the per-layer
//! representation manifolds of dense networks.
//!
//! * [`data`]: point clouds, synthetic manifolds, IDX/CSV ingestion.
//! * [`neighbors`]: exact k-NN, k-NN graphs and graph geodesics.
//! * [`estimate`]: local (nearest-neighbour ratio) and global
//!   (geodesic distance distribution) dimension estimators.
//! * [`nn`]: dense networks trained by SGD with optional weight noise.
//! * [`theory`]: closed-form quantities of the noisy two-layer linear model.
//! * [`probe`]: per-layer, per-class probing, phase detection and the
//!   end-to-end pipeline driven by a JSON config.

pub mod data;
pub mod error;
pub mod estimate;
pub mod neighbors;
pub mod nn;
pub mod probe;
pub mod rng;
pub mod theory;

pub use data::{split_by_class, LabeledDataset, PointCloud};
pub use error::{Error, Result};
