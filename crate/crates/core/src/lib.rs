//! Separable Galerkin solver for the stationary plate that is hinged on
//! `x = 0, pi` and free on `y = -l, l`, driven by a flow term `alpha u_y`.
//!
//! The x-direction uses interpolatory sine modes and the y-direction C0 cubic
//! Lagrange elements; the 2D system is assembled from 1D Gram matrices by
//! Kronecker products.

// `!(x > y)` is used on purpose so NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cli;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
