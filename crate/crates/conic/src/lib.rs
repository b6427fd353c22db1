//! Dense primal-dual interior-point solver for linear, second-order cone and
//! semidefinite programs, with a small modeling layer for building them from
//! real and complex affine expressions.

mod cones;
pub mod dump;
mod error;
mod expr;
pub mod planted;
mod problem;
mod solver;

pub use error::{ConicError, Result};
pub use expr::{CLinExpr, LinExpr, Var};
pub use problem::{hermitian_embed, smat, svec, svec_index, Cone, ConicProblem, ProblemBuilder};
pub use solver::{solve, ConicSolution, IterLog, Settings, Status};
