//! Graph learning with global SimRank aggregation.
//!
//! The crate covers the whole pipeline: graph ingestion and homophily,
//! SimRank by fixed point, power series and local push, top-k pruning,
//! random-walk cross-checks, a small dense neural-network stack, and the
//! model with its training loop.

pub mod bench;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod format;
pub mod generators;
pub mod graph;
pub mod model;
pub mod nn;
pub mod simrank;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use graph::Graph;
