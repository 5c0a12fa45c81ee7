//! Gradient-flow solver for symmetric positive definite systems realised
//! through quantum eigenvalue transformation.
//!
//! The pipeline runs end to end on a classical machine:
//!
//! - [`fem`] assembles plane-stress elasticity problems into SPD systems,
//! - [`flow`] evaluates the exact gradient flow `du/dt = f - K u`,
//! - [`softabs`] and [`approx`] build even, bounded Chebyshev targets,
//! - [`qsp`] solves phase factors for those polynomials,
//! - [`qcirc`] simulates the two-branch eigenvalue-transformation circuit,
//! - [`qmia`] provides the matrix-inverse baseline,
//! - [`sweep`] drives `(t, p)` grids and writes CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod fem;
pub mod flow;
pub mod qcirc;
pub mod qmia;
pub mod qsp;
pub mod softabs;
pub mod sweep;

pub use error::{QgfaError, Result};
pub use fem::SpdSystem;
