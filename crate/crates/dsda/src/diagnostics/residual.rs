//! Normalized residuals
//!
//! ```text
//! rho_X = ||A^T X + X A - X B B^T X + C^T C||_F
//!         / (2 ||A^T X||_F + ||X B B^T X||_F + ||C^T C||_F)
//! ```
//!
//! and the mirrored dual metric. The low-rank path never forms an `n x n`
//! matrix: with `X = Q D Q^T` the residual is `F S F^T` for the slim block
//! `F = [Q, A^T Q, C^T]` and a small structured `S`, so
//! `||R||_F^2 = trace(S G S G)` with the Gram matrix `G = F^T F`. The trace
//! is evaluated through a thin QR of `F` as `||R_F S R_F^T||_F^2`, which is
//! the same quantity but keeps the cancellation at entry level.

use nalgebra::{DMatrix, DVector};

use crate::lowrank::LowRankGram;
use crate::problem::CareProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMethod {
    LowRank,
    Dense,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub rho: f64,
    pub num: f64,
    pub den: f64,
    pub method: ResidualMethod,
}

/// Primal residual of a factored iterate. Cost `O(n (r + l)^2)`.
pub fn residual_lowrank(p: &CareProblem, x: &LowRankGram) -> ResidualReport {
    let ct = p.c.transpose();
    residual_factored(p, x, &p.b, &ct, false)
}

/// Dual residual: same metric with `A <-> A^T` and `B <-> C^T`.
pub fn residual_dual_lowrank(p: &CareProblem, y: &LowRankGram) -> ResidualReport {
    let ct = p.c.transpose();
    residual_factored(p, y, &ct, &p.b, true)
}

/// Shared core: residual of `M^T X + X M - X Bf Bf^T X + Cf Cf^T` where
/// `M = A` (primal) or `A^T` (dual, `transpose = true`), `Bf` the quadratic
/// factor and `Cf` the constant factor.
fn residual_factored(
    p: &CareProblem,
    x: &LowRankGram,
    bf: &DMatrix<f64>,
    cf: &DMatrix<f64>,
    transpose: bool,
) -> ResidualReport {
    let n = p.n();
    let r = x.rank();
    let lc = cf.ncols();
    let ev = x.eigenvalues(); // D diagonal, length r

    // W = M^T Q
    let w = if transpose {
        p.a.mul_dense(&x.q)
    } else {
        p.a.mul_transpose_dense(&x.q)
    };

    // F = [Q, W, Cf]
    let s_dim = 2 * r + lc;
    let mut f = DMatrix::zeros(n, s_dim);
    f.columns_mut(0, r).copy_from(&x.q);
    f.columns_mut(r, r).copy_from(&w);
    f.columns_mut(2 * r, lc).copy_from(cf);

    // S = [[-D (Q^T Bf)(Bf^T Q) D, D, 0], [D, 0, 0], [0, 0, I]]
    let qtb = x.q.transpose() * bf; // r x mb
    let mut s = DMatrix::zeros(s_dim, s_dim);
    {
        let core = &qtb * qtb.transpose(); // r x r
        for i in 0..r {
            for jj in 0..r {
                s[(i, jj)] = -ev[i] * core[(i, jj)] * ev[jj];
            }
            s[(i, r + i)] = ev[i];
            s[(r + i, i)] = ev[i];
        }
        for i in 0..lc {
            s[(2 * r + i, 2 * r + i)] = 1.0;
        }
    }

    // ||F S F^T||_F via the thin QR congruence.
    let num = if s_dim == 0 {
        0.0
    } else {
        let qr = f.qr();
        let rf = qr.r();
        (&rf * &s * rf.transpose()).norm()
    };

    // Denominator terms from small Grams:
    // ||M^T X||_F = ||W D||_F since Q has orthonormal columns.
    let wd_norm = {
        let mut acc = 0.0;
        for j in 0..r {
            let col = w.column(j);
            acc += (ev[j] * ev[j]) * col.norm_squared();
        }
        acc.sqrt()
    };
    // ||X Bf Bf^T X||_F = ||D (Q^T Bf)(Bf^T Q) D||_F.
    let quad_norm = {
        let mut m = &qtb * qtb.transpose();
        for i in 0..r {
            for jj in 0..r {
                m[(i, jj)] *= ev[i] * ev[jj];
            }
        }
        m.norm()
    };
    // ||Cf Cf^T||_F = ||Cf^T Cf||_F.
    let const_norm = (cf.transpose() * cf).norm();

    let den = 2.0 * wd_norm + quad_norm + const_norm;
    let rho = if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    ResidualReport {
        rho,
        num,
        den,
        method: ResidualMethod::LowRank,
    }
}

/// Dense reference residual; desk scale.
pub fn residual_dense(p: &CareProblem, x: &DMatrix<f64>) -> ResidualReport {
    let a = p.a.to_dense();
    let g = &p.b * p.b.transpose();
    let h = p.c.transpose() * &p.c;
    residual_dense_parts(&a, &g, &h, x)
}

/// Dense dual residual; desk scale.
pub fn residual_dual_dense(p: &CareProblem, y: &DMatrix<f64>) -> ResidualReport {
    let a = p.a.to_dense().transpose();
    let g = p.c.transpose() * &p.c;
    let h = &p.b * p.b.transpose();
    residual_dense_parts(&a, &g, &h, y)
}

fn residual_dense_parts(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> ResidualReport {
    let atx = a.transpose() * x;
    let xgx = x * g * x;
    let res = &atx + atx.transpose() - &xgx + h;
    let num = res.norm();
    let den = 2.0 * atx.norm() + xgx.norm() + h.norm();
    let rho = if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    ResidualReport {
        rho,
        num,
        den,
        method: ResidualMethod::Dense,
    }
}

/// Builds a factored representation of a dense symmetric psd matrix for
/// cross-checks (eigendecomposition, nonnegative part).
pub fn gram_from_dense(x: &DMatrix<f64>, tol: f64) -> LowRankGram {
    let eig = x.clone().symmetric_eigen();
    let mut cols = Vec::new();
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > tol {
            cols.push(i);
        }
    }
    let n = x.nrows();
    let mut q = DMatrix::zeros(n, cols.len());
    let mut d = DVector::zeros(cols.len());
    for (k, &i) in cols.iter().enumerate() {
        q.set_column(k, &eig.eigenvectors.column(i));
        d[k] = eig.eigenvalues[i].sqrt();
    }
    LowRankGram::new(q, d, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn scalar_problem() -> CareProblem {
        CareProblem::from_dense(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            None,
            1.0,
        )
        .unwrap()
    }

    fn scalar_gram(x: f64) -> LowRankGram {
        LowRankGram::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_vec(vec![x.sqrt()]),
            1.0,
        )
    }

    #[test]
    fn exact_solution_has_zero_residual() {
        let p = scalar_problem();
        let rep = residual_lowrank(&p, &scalar_gram(2.0f64.sqrt() - 1.0));
        assert!(rep.rho <= 1e-15, "rho = {:e}", rep.rho);
    }

    #[test]
    fn scalar_first_iterate_residual_is_frozen() {
        // X = 12/29: num = 1/841, den = 1681/841, rho = 1/1681
        let p = scalar_problem();
        let rep = residual_lowrank(&p, &scalar_gram(12.0 / 29.0));
        assert!((rep.num - 1.0 / 841.0).abs() < 1e-12);
        assert!((rep.den - 1681.0 / 841.0).abs() < 1e-12);
        assert!((rep.rho - 1.0 / 1681.0).abs() < 1e-12);
    }

    #[test]
    fn self_dual_scalar_instance() {
        let p = scalar_problem();
        let x = scalar_gram(12.0 / 29.0);
        let a = residual_lowrank(&p, &x);
        let b = residual_dual_lowrank(&p, &x);
        assert!((a.rho - b.rho).abs() < 1e-15);
        assert!((a.num - b.num).abs() < 1e-15);
    }

    #[test]
    fn zero_iterate_zero_quadratic_factor_guarded() {
        // Y = 0 and B = 0: dual denominator degenerates to zero
        let p = CareProblem::from_dense(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 0.0),
            DMatrix::from_element(1, 1, 0.0),
            None,
            1.0,
        )
        .unwrap();
        let y = LowRankGram::zero(1);
        let rep = residual_dual_lowrank(&p, &y);
        assert_eq!(rep.num, 0.0);
        assert_eq!(rep.rho, 0.0);
    }

    #[test]
    fn lowrank_matches_dense_on_random_instance() {
        let p = crate::testgen::stable_instance(21, 50, 3, 2, 0.1);
        // a synthetic low-rank psd iterate
        let mut rng_mat = DMatrix::zeros(50, 4);
        for j in 0..4 {
            for i in 0..50 {
                rng_mat[(i, j)] = (((i * 13 + j * 7) as f64) * 0.61).sin();
            }
        }
        let qr = crate::kernels::qr_col_pivot(&rng_mat, crate::kernels::DEFAULT_QR_RANK_U);
        let x = LowRankGram::new(
            qr.q.clone(),
            DVector::from_vec(vec![1.5, 0.8, 0.3, 0.05]),
            2.0 * 0.1,
        );
        let lr = residual_lowrank(&p, &x);
        let de = residual_dense(&p, &x.to_dense());
        assert!((lr.rho - de.rho).abs() <= 1e-12, "{} vs {}", lr.rho, de.rho);
        let lr_dual = residual_dual_lowrank(&p, &x);
        let de_dual = residual_dual_dense(&p, &x.to_dense());
        assert!((lr_dual.rho - de_dual.rho).abs() <= 1e-12);
    }
}
