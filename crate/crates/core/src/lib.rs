//! Conditional randomization testing with lasso distillation: covariate
//! models, penalized regression, test statistics and p-value engines,
//! variable selection pipelines, and a simulation harness.

pub mod crt;
pub mod data;
pub mod distill;
pub mod error;
pub mod lasso;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod select;
pub mod sim;

pub use error::{Error, ErrorKind, Result};
