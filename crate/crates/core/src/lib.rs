//! Axisymmetric incompressible Navier-Stokes in a finite cylinder, written in
//! swirl / rescaled-vorticity variables, with a harness that checks a-priori
//! estimates along computed trajectories.

// Negated float comparisons are deliberate: they send NaN down the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Stencil loops read several arrays at offsets of the same index.
#![allow(clippy::needless_range_loop)]

pub mod cases;
pub mod certificates;
pub mod cli;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod grid;
pub mod linalg;
pub mod norms;

pub use error::{Error, Result};
pub use grid::Grid;
