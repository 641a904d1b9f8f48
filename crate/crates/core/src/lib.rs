//! Kernel density estimation on compact manifolds embedded in Euclidean space.
// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod covering;
pub mod descriptor;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod integrability;
pub mod kernels;
pub mod quad;
pub mod sampling;

pub use error::{Error, Result};
