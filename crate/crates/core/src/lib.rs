//! Spectral computations for the Robin Laplacian on a metric star graph with
//! Dirichlet conditions at the outer vertices and a complex coupling at the
//! centre.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diophantine;
pub mod error;
pub mod graph;
pub mod io;
pub mod kirchhoff;
pub mod measure;
pub mod robin;
pub mod secular;

pub use error::{Error, Result};
pub use graph::StarGraph;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
