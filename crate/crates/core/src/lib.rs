//! Exact genealogies, site frequency spectra and clonal moments for a
//! stationary population driven by the quadratic branching mechanism
//! `ψθ(u) = βu² + 2βθu`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod clonal;
pub mod error;
pub mod genealogy;
pub mod mc;
pub mod model;
pub mod sfs;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use model::ModelParams;
