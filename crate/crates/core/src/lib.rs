// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod models;
pub mod optim;
pub mod tasks;
pub mod vecmath;

pub use error::{Error, Result};
