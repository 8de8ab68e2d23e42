//! Statistical characterization of distributed multi-RIS links.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod moments;
pub mod quad;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
