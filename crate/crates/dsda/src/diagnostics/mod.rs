//! Residual metrics, discrete-equation fixed-point and perturbation theory,
//! and numerical verifiers for the truncation error bounds.

mod bounds;
mod perturbation;
mod residual;

pub use bounds::{
    convergence_order, monotonicity_check, monotonicity_check_lowrank, truncation_bound_check_j1,
    truncation_bound_check_js, BoundCheck, MonotonicityReport,
};
pub use perturbation::{
    dare_fixed_point_defect, first_order_bound, perturbation_bound, perturbation_quantities,
    PerturbationBound, PerturbationDeltas, PerturbationQuantities,
};
pub use residual::{gram_from_dense, 
    residual_dense, residual_dual_dense, residual_dual_lowrank, residual_lowrank, ResidualMethod,
    ResidualReport,
};
