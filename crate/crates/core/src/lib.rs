// `!(x > 0.0)` deliberately rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod analytic;
pub mod bath;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod expoly;
pub mod integrators;
pub mod kernels;
pub mod noise;
pub mod output;
pub mod quad;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
pub use kernels::{CutoffKind, KernelSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
