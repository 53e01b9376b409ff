use serde::{Deserialize, Serialize};

/// Truncation tolerance: a single value used at every step, or a per-step
/// schedule (entry `j-1` is the tolerance for the step producing level `j`;
/// the last entry repeats once the schedule is exhausted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruncationSchedule {
    Constant(f64),
    PerStep(Vec<f64>),
}

impl TruncationSchedule {
    /// Tolerance for the truncation that produces level `j` (1-based).
    pub fn eps_for(&self, j: usize) -> f64 {
        match self {
            TruncationSchedule::Constant(e) => *e,
            TruncationSchedule::PerStep(v) => {
                if v.is_empty() {
                    0.0
                } else {
                    v[(j.max(1) - 1).min(v.len() - 1)]
                }
            }
        }
    }
}

impl Default for TruncationSchedule {
    fn default() -> Self {
        TruncationSchedule::Constant(1e-15)
    }
}

impl From<f64> for TruncationSchedule {
    fn from(e: f64) -> Self {
        TruncationSchedule::Constant(e)
    }
}

/// Solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Cayley shift defining `A_gamma = A - gamma*I`.
    pub gamma: f64,
    /// Truncation tolerance for both factor sides.
    pub trunc_tol: TruncationSchedule,
    /// Optional override for the dual-side (G) truncation tolerance.
    pub trunc_tol_g: Option<TruncationSchedule>,
    /// Stop once the normalized residual of the primal equation drops below
    /// this value.
    pub res_tol: f64,
    /// Maximum number of doubling steps.
    pub max_iter: usize,
    /// Below this order the problem is treated densely (dense factorization,
    /// dense seed matrices for the oracles).
    pub dense_threshold: usize,
    /// Track the dual solution factor alongside the primal one.
    pub compute_dual: bool,
    /// Keep the per-iteration history in the run record.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 1e-6,
            trunc_tol: TruncationSchedule::default(),
            trunc_tol_g: None,
            res_tol: 1e-13,
            max_iter: 20,
            dense_threshold: 500,
            compute_dual: true,
            record_history: true,
        }
    }
}

impl SolverConfig {
    pub fn eps_for(&self, j: usize) -> f64 {
        self.trunc_tol.eps_for(j)
    }

    /// G-side tolerance; falls back to the shared schedule.
    pub fn eps_g_for(&self, j: usize) -> f64 {
        self.trunc_tol_g
            .as_ref()
            .map(|s| s.eps_for(j))
            .unwrap_or_else(|| self.trunc_tol.eps_for(j))
    }
}
