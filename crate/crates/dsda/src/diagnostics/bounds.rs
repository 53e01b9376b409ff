//! Numerical verifiers for the truncation error bounds, monotonicity of the
//! doubling iterates, and the observed convergence order.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lowrank::LowRankGram;
use crate::problem::{min_symmetric_eigenvalue, spectral_norm};
use crate::reference::DenseTrace;

#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
    /// False when the truncation premise `sigma_{r+1} <= eps sigma_1` does
    /// not hold on one of the sides, in which case `ok` is meaningless.
    pub applicable: bool,
}

fn premise_holds(sigma_full: &nalgebra::DVector<f64>, kept: usize, eps: f64) -> bool {
    if kept >= sigma_full.len() {
        return true;
    }
    sigma_full[kept] <= eps * sigma_full[0] * (1.0 + 1e-12) + f64::MIN_POSITIVE
}

/// First-step bound: `||A_1^{(1)} - A_1|| <= 4 g eps_1 ||S_G|| ||S_Y|| ||S_H||`.
pub fn truncation_bound_check_j1(trace: &DenseTrace, eps1: f64) -> Result<BoundCheck> {
    let lvl = trace.level(1)?;
    let lhs = spectral_norm(&(&lvl.a_jj - &trace.a1));
    let s_g = lvl.sigma1_g[0];
    let s_h = lvl.sigma1_h[0];
    let s_y = trace.sigma_y1.get(0).copied().unwrap_or(0.0);
    let rhs = 4.0 * trace.gamma * eps1 * s_g * s_y * s_h;
    let applicable = premise_holds(&lvl.sigma_full_g, lvl.sigma1_g.len(), eps1)
        && premise_holds(&lvl.sigma_full_h, lvl.sigma1_h.len(), eps1);
    let slack = 1e-13 * (1.0 + trace.a1.norm());
    Ok(BoundCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-8) + slack,
        applicable,
    })
}

/// Step bound at `s >= 1`:
/// `||A_{s+1}^{(s+1)} - A_{s+1}^{(s)}|| <= 4 g kappa_s eps_{s+1} ||S_G'|| ||S_H'||`
/// with `kappa_s = max(1, ||K_s||^2) (2 g ||S_Y|| + sqrt(1 + 4 g^2 ||S_Y||^2))`.
pub fn truncation_bound_check_js(trace: &DenseTrace, s: usize, eps: f64) -> Result<BoundCheck> {
    if s < 1 {
        return Err(Error::TraceMissing);
    }
    let lvl = trace.level(s)?;
    let next = trace.level(s + 1)?;
    let a_untrunc = lvl.a_next_untruncated.as_ref().ok_or(Error::TraceMissing)?;
    let k_g = lvl.k_g.as_ref().ok_or(Error::TraceMissing)?;
    let sy = lvl.sigma_y_next.as_ref().ok_or(Error::TraceMissing)?;

    let lhs = spectral_norm(&(&next.a_jj - a_untrunc));
    let k_norm = spectral_norm(k_g);
    let sy_norm = sy.get(0).copied().unwrap_or(0.0);
    let g = trace.gamma;
    let kappa = k_norm.powi(2).max(1.0)
        * (2.0 * g * sy_norm + (1.0 + 4.0 * g * g * sy_norm * sy_norm).sqrt());
    let rhs = 4.0 * g * kappa * eps * next.sigma1_g[0] * next.sigma1_h[0];
    let applicable = premise_holds(&next.sigma_full_g, next.sigma1_g.len(), eps)
        && premise_holds(&next.sigma_full_h, next.sigma1_h.len(), eps);
    let slack = 1e-13 * (1.0 + a_untrunc.norm());
    Ok(BoundCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-8) + slack,
        applicable,
    })
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    /// Smallest eigenvalue of any consecutive difference, scaled by the
    /// larger iterate norm.
    pub worst_relative_dip: f64,
    pub ok: bool,
}

/// Checks `H_{k+1} >= H_k` (up to `tol` relative slack) on dense iterates.
pub fn monotonicity_check(iterates: &[DMatrix<f64>], tol: f64) -> MonotonicityReport {
    let mut worst = 0.0f64;
    for w in iterates.windows(2) {
        let diff = &w[1] - &w[0];
        let min_eig = min_symmetric_eigenvalue(&diff);
        let scale = w[1].norm().max(1e-300);
        worst = worst.min(min_eig / scale);
    }
    MonotonicityReport {
        worst_relative_dip: worst,
        ok: worst >= -tol,
    }
}

/// Joint-basis variant for factored iterates.
pub fn monotonicity_check_lowrank(iterates: &[LowRankGram], tol: f64) -> MonotonicityReport {
    let mut worst = 0.0f64;
    for w in iterates.windows(2) {
        let min_eig = w[1].sub_min_eigenvalue(&w[0]);
        let scale = w[1].frobenius_norm().max(1e-300);
        worst = worst.min(min_eig / scale);
    }
    MonotonicityReport {
        worst_relative_dip: worst,
        ok: worst >= -tol,
    }
}

/// Least-squares fit of `log e_{k+1} = order * log e_k + c` over consecutive
/// pairs above `floor`. Needs at least four usable points.
pub fn convergence_order(history: &[f64], floor: f64) -> Result<f64> {
    let usable: Vec<f64> = history
        .iter()
        .cloned()
        .take_while(|&e| e > floor)
        .collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            found: usable.len(),
        });
    }
    let xs: Vec<f64> = usable[..usable.len() - 1].iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = usable[1..].iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::InsufficientData {
            needed: 4,
            found: usable.len(),
        });
    }
    Ok((n * sxy - sx * sy) / denom)
}
