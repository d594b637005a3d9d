//! Propensity models, propensity-scored metrics and training under missing
//! labels for extreme multi-label classification.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod datagen;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod propensity;
pub mod propfit;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
