//! Consensus selection over sampled action chunks.
//!
//! Given K candidate chunks sampled from one context, [`selector::select`]
//! returns the index of one of them: the global medoid when the batch looks
//! unimodal, otherwise the medoid of the largest k-means cluster. The
//! [`simulator`] module estimates what that buys at the episode level on
//! labeled mixture models, and [`protocol`] exposes selection as a
//! line-delimited JSON service.

pub mod batch;
pub mod clustering;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod latency;
pub mod protocol;
pub mod seed;
pub mod selector;
pub mod simulator;

pub use batch::{validate_batch, ActionChunk, BatchError, CandidateBatch, ChunkError};
pub use clustering::{ClusterAssignment, ClusterConfig, ClusterError};
pub use exec::Execution;
pub use geometry::{DistanceMatrix, Metric};
pub use selector::{select, SelectError, SelectionPath, SelectionResult, SelectorConfig};
