//! Minimal solutions, pull-in bounds, stability and boundary behaviour for
//! `(-Delta)^s u = lambda / (a - u)^2` on the unit ball.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod barrier;
pub mod boundary;
pub mod error;
pub mod fit;
pub mod green;
pub mod grid;
pub mod kernel;
pub mod lu;
pub mod operator;
pub mod oracle;
pub mod pointwise;
pub mod profile;
pub mod psi;
pub mod pullin;
pub mod quadrature;
pub mod roots;
pub mod solver;
pub mod special;
pub mod stability;
pub mod verify;

pub use error::{FracError, Result};
pub use green::{GreenMethod, GreenOperator};
pub use grid::{Geometry, GridFunction, GridSpec, RadialGrid};
pub use operator::{FracParams, OperatorMatrix};
pub use pullin::PullInResult;
pub use solver::{MembraneProfile, MinimalSolver, Status, Tolerances};
