//! Isotropy analysis for sets of model hidden-state vectors.
//!
//! The crate measures how evenly a point cloud spreads its variance over the
//! dimensions of its ambient space ([`isoscore`]), alongside older
//! anisotropy baselines ([`baselines`]) and singular-value spectra
//! ([`geometry`]). [`ingest`] turns token-level hidden-state dumps into
//! sentence-level clouds and [`analysis`] reproduces the bilingual vs.
//! multilingual comparisons built on top of them.

pub mod analysis;
pub mod baselines;
pub mod cloud;
pub mod error;
pub mod format;
pub mod geometry;
pub mod group;
pub mod ingest;
pub mod isoscore;
pub mod oracle;
pub mod synth;

pub use cloud::PointCloud;
pub use error::{IsoError, Result};
pub use group::{GroupKey, ModelType, Side, TargetLang};
pub use isoscore::{isoscore, IsoScoreResult};

/// Version string recorded in reports and run manifests.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
