//! Monotone reweighted solver for nonsmooth nonconvex composite problems
//! `min_x q|Ax − b|² + Σ φ((Λx)ᵢ)` with power-law, SCAD and MCP penalties.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod gallery;
pub mod io;
pub mod monotone;
pub mod par;
pub mod penalty;
pub mod problem;
pub mod sparse;

pub use error::{Error, LinalgError, Result};
pub use monotone::{continuation_solve, inner_solve, ContinuationSchedule, MonotoneSolver, SolveReport};
pub use penalty::{Penalty, PenaltyKind, SmoothedPenalty};
pub use problem::CompositeProblem;
pub use sparse::{LinearSolveOptions, SolveMethod, SparseMatrix};
