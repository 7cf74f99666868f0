//! Adaptive multi-scale correlation search for pairs of time series.
//!
//! The pipeline: ingest two raw series onto a shared regular grid
//! ([`ingest`]), rank-transform them to the unit square, estimate mutual
//! information with a box-assisted k-nearest-neighbor estimator ([`ksg`]),
//! maintain estimates incrementally under sliding windows ([`window`]), and
//! search the series top-down across window granularities for correlated
//! stretches ([`search`], [`parallel`]). Detected windows carry entropy
//! normalizations and a monotonic association sign ([`assoc`]). [`synth`]
//! generates benchmark relation pairs with Pearson and distance-correlation
//! baselines.

pub mod assoc;
pub mod bench;
pub mod error;
pub mod ingest;
pub mod ksg;
pub mod parallel;
pub mod search;
pub mod synth;
pub mod window;

pub use error::{AmicError, Result};
