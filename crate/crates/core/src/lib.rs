//! Differentiable Gaussian splatting on the CPU, with clean training,
//! viewpoint-stabilized backdoor poisoning and a render-and-retrain poisoning
//! baseline.

// NaN must fail range checks, so `!(x > 0.0)` is intended throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod density;
pub mod error;
pub mod gaussian;
pub mod harness;
pub mod geometry;
pub mod image;
pub mod io_util;
pub mod metrics;
pub mod render;
pub mod train;
pub mod ves;

pub use error::{Error, Result};
