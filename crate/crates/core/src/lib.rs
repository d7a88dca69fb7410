//! Feature selection for k-means clustering: deterministic and randomized
//! column sampling, selection pipelines, clustering backends, and instance-level
//! checks of the approximation guarantees.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod kmeans;
pub mod matrix;
pub mod pipelines;
pub mod sparsifiers;
pub mod verify;

pub use error::{Error, Result};
