use thiserror::Error;

/// Errors shared by the problem model, the factorization kernels, the
/// reference oracles and the truncated doubling solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix {which} is rank deficient: rank {found} < {expected}")]
    RankDeficient {
        which: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("weight R is not symmetric positive definite")]
    WeightNotSpd,

    #[error("A - gamma*I is numerically singular; try a different gamma")]
    SingularShift,

    #[error("K_gamma = A_gamma^T + H A_gamma^-1 G is numerically singular; try a different gamma")]
    SingularKGamma,

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("I + G_k H_k is near singular (cond ~ {cond:.3e})")]
    NearSingularPencil { cond: f64 },

    #[error("no convergence within {0} iterations")]
    MaxIterations(usize),

    #[error("Hamiltonian matrix has eigenvalues on or near the imaginary axis")]
    ImaginaryAxisEigenvalues,

    #[error("stable subspace basis block W1 is singular")]
    SingularW1,

    #[error("untruncated kernel dimension {needed} exceeds cap {cap}")]
    KernelCapExceeded { needed: usize, cap: usize },

    #[error("degenerate problem: {0}")]
    DegenerateProblem(&'static str),

    #[error("kernel factor degenerated to zero during truncation")]
    KernelDegenerate,

    #[error("closed-loop matrix is not d-stable")]
    UnstableClosedLoop,

    #[error("SVD failed to converge")]
    ConvergenceFailure,

    #[error("hypotheses of the perturbation bound are violated: {0}")]
    ConditionsViolated(String),

    #[error("not enough data points: need {needed}, got {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("dense trace does not extend to the requested step")]
    TraceMissing,

    #[error("matrix I + G_k X is singular")]
    SingularMatrix,
}

pub type Result<T> = std::result::Result<T, Error>;
