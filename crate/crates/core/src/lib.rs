//! Second-order PHD filtering with a Panjer-distributed target process.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cardinality;
pub mod cli;
pub mod corrective;
pub mod error;
pub mod experiment;
pub mod filters;
pub mod gm;
pub mod metrics;
pub mod regional;
pub mod simulator;

pub use error::{Error, Result};
