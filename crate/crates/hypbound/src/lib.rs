//! Numerical toolkit for Hénon-like maps: invariant manifolds, tangency
//! parameters, hyperbolic coordinates and hyperbolicity diagnostics.

// Negated float comparisons are used on purpose so that NaN fails a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod cli;
pub mod config;
pub mod curve;
pub mod curves_critical;
pub mod error;
pub mod fixed_points;
pub mod geometry;
pub mod hyperbolicity;
pub mod hypcoord;
pub mod manifolds;
pub mod map_core;
pub mod onedim;
pub mod regions;
pub mod report;

pub use error::{Error, Result};
