//! Dense desk-scale oracles: the classic coupled doubling recursion, the
//! untruncated decoupled form, a Hamiltonian invariant-subspace solver, and
//! a fully dense trace of the truncated iteration for identity checking.

mod dsda;
mod hamiltonian;
mod sda;
mod trace;

pub use dsda::{dsda_evaluate, dsda_kernel_seed, dsda_kernel_step, DsdaKernel, DEFAULT_KERNEL_CAP};
pub use hamiltonian::{hamiltonian_care_oracle, HamiltonianSolution};
pub use sda::{sda_solve_care, sda_solve_dare, sda_step, SdaHistory, SdaState};
pub use trace::{dense_dsda_t_trace, DenseTrace, TraceLevel};
