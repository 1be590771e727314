//! Pre-conditioned PI consensus for distributed optimization, with the
//! classical baselines, diagnostics and an experiment runner.

// `!(x > 0.0)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod analysis;
pub mod costs;
pub mod data_io;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod runner;

pub use error::{Error, Result};
