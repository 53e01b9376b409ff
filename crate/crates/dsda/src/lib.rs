//! Low-rank solver for large-scale continuous-time algebraic Riccati
//! equations
//!
//! ```text
//! A^T X + X A - X G X + H = 0,    G = B R^-1 B^T,    H = C^T C,
//! ```
//!
//! built on the decoupled doubling recursion with per-step rank truncation.
//! The solver propagates two orthonormal bases with a small coupling kernel
//! instead of the exponentially growing block Krylov factors, so memory and
//! work stay proportional to the numerical solution rank.
//!
//! Besides the solver itself ([`solver::solve`]) the crate ships dense
//! desk-scale oracles ([`reference`]) and residual/error-bound diagnostics
//! ([`diagnostics`]) used to cross-check every recursion against its direct
//! definition.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod kernels;
pub mod lowrank;
pub mod problem;
pub mod reference;
pub mod seed;
pub mod shifted;
pub mod solver;
pub mod sparse;
pub mod testgen;

pub use config::{SolverConfig, TruncationSchedule};
pub use error::{Error, Result};
pub use lowrank::LowRankGram;
pub use problem::{fold_weight, validate_problem, CareProblem, CoeffMatrix, ValidationReport};
pub use seed::{sda_seed, SdaSeed};
pub use shifted::{build_shifted_operator, ShiftedOperator};
pub use solver::{solve, RunRecord, SolveResult, Termination};
