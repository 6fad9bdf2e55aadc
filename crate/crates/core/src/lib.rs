//! Differentially private release of multi-dimensional histograms.
//!
//! A data cube is released in two phases: noisy cell counts drive a kd-tree
//! partition into near-uniform subcubes, whose counts are then released with
//! a second budget share. Range queries are answered from the release by a
//! uniform or a least-squares estimator.

pub mod analysis;
pub mod apps;
pub mod cli;
pub mod cube;
pub mod error;
pub mod estimate;
pub mod io;
pub mod partition;
pub mod privacy;
pub mod quadrature;
pub mod stats;
pub mod synth;
pub mod workload;

pub use cube::{ingest, AttributeDomain, CellVector, CubeSchema, LinearQuery, PartitionBox, QueryMatrix};
pub use error::{Error, Result};
pub use estimate::{estimate, Estimate, Method};
pub use partition::{kd_partition, release_cell_histogram, release_dpcube, KdParams, ReleasedHistogram};
pub use privacy::{BudgetLedger, NoiseSource, PrivacyParam};
pub use workload::{generate_workload, Workload};
