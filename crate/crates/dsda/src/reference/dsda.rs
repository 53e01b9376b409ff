//! Untruncated decoupled doubling: the block Krylov factors
//! `U_breve = [U_0, ..., U_{2^k-1}]`, `V_breve` and the small kernel
//! `(Y_k, T_k)` that reproduce the coupled iterates in closed form.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::seed::SdaSeed;
use crate::shifted::ShiftedOperator;

/// The untruncated kernel grows like `2^k`; beyond this many columns the
/// factors are no longer materialized.
pub const DEFAULT_KERNEL_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct DsdaKernel {
    pub k: usize,
    /// `n x 2^k m`.
    pub ubreve: DMatrix<f64>,
    /// `n x 2^k l`.
    pub vbreve: DMatrix<f64>,
    /// `2^k m x 2^k l`.
    pub y: DMatrix<f64>,
    /// `U_breve^T V_breve`.
    pub t: DMatrix<f64>,
    pub gamma: f64,
    cap: usize,
}

/// Kernel at `k = 0`.
pub fn dsda_kernel_seed(seed: &SdaSeed, gamma: f64, cap: Option<usize>) -> DsdaKernel {
    DsdaKernel {
        k: 0,
        ubreve: seed.u0.clone(),
        vbreve: seed.v0.clone(),
        y: seed.y0.clone(),
        t: seed.t0.clone(),
        gamma,
        cap: cap.unwrap_or(DEFAULT_KERNEL_CAP),
    }
}

/// One doubling of the factors: appends the propagated blocks
/// `A_tilde^{2^k} U_breve` / `(A_tilde^T)^{2^k} V_breve`, forms
/// `Y_{k+1} = [[0, Y_k], [Y_k, 2 gamma T_k]]` and `T_{k+1} = U^T V`.
pub fn dsda_kernel_step(d: &DsdaKernel, op: &ShiftedOperator) -> Result<DsdaKernel> {
    let mu = d.ubreve.ncols();
    let lv = d.vbreve.ncols();
    let needed = 2 * mu.max(lv);
    if needed > d.cap {
        return Err(Error::KernelCapExceeded { needed, cap: d.cap });
    }
    let e = 1u64 << d.k;
    let u_new = op.apply_a_tilde_power(&d.ubreve, e, false);
    let v_new = op.apply_a_tilde_power(&d.vbreve, e, true);

    let n = d.ubreve.nrows();
    let mut ubreve = DMatrix::zeros(n, 2 * mu);
    ubreve.columns_mut(0, mu).copy_from(&d.ubreve);
    ubreve.columns_mut(mu, mu).copy_from(&u_new);
    let mut vbreve = DMatrix::zeros(n, 2 * lv);
    vbreve.columns_mut(0, lv).copy_from(&d.vbreve);
    vbreve.columns_mut(lv, lv).copy_from(&v_new);

    let mut y = DMatrix::zeros(2 * mu, 2 * lv);
    y.view_mut((0, lv), (mu, lv)).copy_from(&d.y);
    y.view_mut((mu, 0), (mu, lv)).copy_from(&d.y);
    y.view_mut((mu, lv), (mu, lv))
        .copy_from(&(&d.t * (2.0 * d.gamma)));

    let t = ubreve.transpose() * &vbreve;
    Ok(DsdaKernel {
        k: d.k + 1,
        ubreve,
        vbreve,
        y,
        t,
        gamma: d.gamma,
        cap: d.cap,
    })
}

/// Evaluates the three decoupled formulas densely:
/// `H_k = 2g V (I + Y^T Y)^-1 V^T`, `G_k = 2g U (I + Y Y^T)^-1 U^T`,
/// `A_k = A_tilde^{2^k} - 2g U (I + Y Y^T)^-1 Y V^T`.
pub fn dsda_evaluate(
    d: &DsdaKernel,
    op: &ShiftedOperator,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let two_gamma = 2.0 * d.gamma;
    let mu = d.ubreve.ncols();
    let lv = d.vbreve.ncols();

    let eyyt = DMatrix::identity(mu, mu) + &d.y * d.y.transpose();
    let fyty = DMatrix::identity(lv, lv) + d.y.transpose() * &d.y;
    let eyyt_chol = eyyt.cholesky().expect("I + Y Y^T is SPD");
    let fyty_chol = fyty.cholesky().expect("I + Y^T Y is SPD");

    let h = &d.vbreve * fyty_chol.solve(&d.vbreve.transpose()) * two_gamma;
    let g = &d.ubreve * eyyt_chol.solve(&d.ubreve.transpose()) * two_gamma;
    let a_pow = op.a_tilde_dense_power(1u64 << d.k);
    let a = a_pow - &d.ubreve * eyyt_chol.solve(&(&d.y * d.vbreve.transpose())) * two_gamma;
    (h, g, a)
}
