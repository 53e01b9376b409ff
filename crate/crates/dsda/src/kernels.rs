//! Dense factorization primitives: rank-revealing pivoted QR, block
//! Gram-Schmidt basis extension, full SVD with a deterministic sign
//! convention, and the relative-tolerance truncation split.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};

/// Scale factor `u` in the pivoted-QR rank rule `|R_ii| > u * k * |R_11|`.
pub const DEFAULT_QR_RANK_U: f64 = f64::EPSILON;

/// Relative threshold below which a column is considered to lie inside the
/// span of the existing basis during Gram-Schmidt extension.
pub const DEFAULT_MGS_DROP_TOL: f64 = 1e-13;

/// Column-pivoted QR of an `n x k` matrix, truncated at the numerical rank.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Orthonormal columns, `n x p`.
    pub q: DMatrix<f64>,
    /// Upper-trapezoidal factor in pivoted column order, `p x k`.
    pub r: DMatrix<f64>,
    /// `perm[j]` is the original index of pivoted column `j`.
    pub perm: Vec<usize>,
}

impl PivotedQr {
    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    /// The factor with columns moved back to the original order, i.e. the
    /// `p x k` matrix `S` with `Q * S = M`.
    pub fn r_unpermuted(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.r.nrows(), self.r.ncols());
        for (j, &orig) in self.perm.iter().enumerate() {
            s.set_column(orig, &self.r.column(j));
        }
        s
    }
}

/// Rank-revealing QR with column pivoting. The numerical rank `p` counts the
/// diagonal entries with `|R_ii| > u * k * |R_11|`; a zero matrix yields
/// `p = 0` and empty factors.
pub fn qr_col_pivot(m: &DMatrix<f64>, rank_u: f64) -> PivotedQr {
    let n = m.nrows();
    let k = m.ncols();
    let qr = m.clone().col_piv_qr();
    let (q_full, r_full, p) = qr.unpack();

    let mut order = RowDVector::<f64>::from_fn(k, |_, j| j as f64);
    p.permute_columns(&mut order);
    let perm: Vec<usize> = order.iter().map(|&x| x as usize).collect();

    let minnk = n.min(k);
    let threshold = rank_u * (k as f64) * r_full[(0, 0)].abs();
    let mut rank = 0;
    for i in 0..minnk {
        if r_full[(i, i)].abs() > threshold {
            rank = i + 1;
        } else {
            break;
        }
    }

    PivotedQr {
        q: q_full.columns(0, rank).into_owned(),
        r: r_full.rows(0, rank).into_owned(),
        perm,
    }
}

/// New orthonormal directions extending `q_prev` with the columns of `w`.
#[derive(Debug, Clone)]
pub struct BasisExtension {
    /// `n x (p - r)` orthonormal columns, orthogonal to `q_prev`.
    pub q_new: DMatrix<f64>,
    /// Coefficients of `w` on `q_prev`, `r x s`.
    pub r12: DMatrix<f64>,
    /// Coefficients of `w` on `q_new`, `(p - r) x s`.
    pub r2: DMatrix<f64>,
}

/// Extends an orthonormal basis by the columns of `w` using modified
/// Gram-Schmidt with one re-orthogonalization pass. Columns numerically
/// inside the current span are dropped, shrinking the extension.
pub fn extend_basis(q_prev: &DMatrix<f64>, w: &DMatrix<f64>) -> BasisExtension {
    extend_basis_with(q_prev, w, 2, DEFAULT_MGS_DROP_TOL)
}

/// As [`extend_basis`] with explicit pass count and drop tolerance. A single
/// pass loses orthogonality on nearly dependent inputs; it is exposed so the
/// check suite can demonstrate exactly that failure mode.
pub fn extend_basis_with(
    q_prev: &DMatrix<f64>,
    w: &DMatrix<f64>,
    passes: usize,
    drop_tol: f64,
) -> BasisExtension {
    assert!(passes >= 1);
    let n = q_prev.nrows();
    let r = q_prev.ncols();
    let s = w.ncols();
    assert_eq!(w.nrows(), n, "column length mismatch in basis extension");

    let mut q_new_cols: Vec<DVector<f64>> = Vec::new();
    let mut r12 = DMatrix::zeros(r, s);
    let mut r2_rows: Vec<Vec<f64>> = Vec::new(); // r2_rows[i][col]

    for col in 0..s {
        let mut v: DVector<f64> = w.column(col).into_owned();
        let w_norm = v.norm();
        for _ in 0..passes {
            if r > 0 {
                let coef = q_prev.transpose() * &v;
                v -= q_prev * &coef;
                for i in 0..r {
                    r12[(i, col)] += coef[i];
                }
            }
            for (i, q) in q_new_cols.iter().enumerate() {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
                r2_rows[i][col] += c;
            }
        }
        let res_norm = v.norm();
        if res_norm > drop_tol * w_norm && res_norm > 0.0 {
            v /= res_norm;
            for row in r2_rows.iter_mut() {
                debug_assert_eq!(row.len(), s);
            }
            let mut new_row = vec![0.0; s];
            new_row[col] = res_norm;
            r2_rows.push(new_row);
            q_new_cols.push(v);
        }
    }

    let p_new = q_new_cols.len();
    let mut q_new = DMatrix::zeros(n, p_new);
    for (i, qcol) in q_new_cols.iter().enumerate() {
        q_new.set_column(i, qcol);
    }
    let mut r2 = DMatrix::zeros(p_new, s);
    for (i, row) in r2_rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            r2[(i, j)] = x;
        }
    }
    BasisExtension { q_new, r12, r2 }
}

/// Singular value decomposition `M = U * diag(S) * V^T`.
///
/// In full mode `U` is `a x a` and `V` is `b x b`; the orthonormal
/// completion beyond `min(a, b)` pairs with zero singular values.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    /// Nonincreasing, length `min(a, b)`.
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    /// The rectangular diagonal `a x b` middle factor.
    pub fn sigma_matrix(&self, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rows, cols);
        for i in 0..self.s.len().min(rows).min(cols) {
            out[(i, i)] = self.s[i];
        }
        out
    }
}

/// Bounded-iteration SVD. The implicit-QR iteration can stall at exactly
/// machine epsilon on hard inputs, so the tolerance is loosened stepwise
/// before giving up.
fn try_svd_staged(
    m: &DMatrix<f64>,
    compute_uv: bool,
) -> Result<nalgebra::linalg::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let iters = 40 * (m.nrows().max(m.ncols()) + 25);
    for eps_scale in [1.0, 64.0, 4096.0] {
        if let Some(f) =
            m.clone()
                .try_svd(compute_uv, compute_uv, f64::EPSILON * eps_scale, iters)
        {
            return Ok(f);
        }
    }
    Err(Error::ConvergenceFailure)
}

/// Singular values only, bounded iteration.
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(try_svd_staged(m, false)?.singular_values)
}

/// SVD with singular values sorted nonincreasing and a deterministic sign
/// convention: the largest-magnitude entry of every left singular vector is
/// positive (ties broken by the first extremal entry).
pub fn svd(m: &DMatrix<f64>, thin: bool) -> Result<SvdFactors> {
    let a = m.nrows();
    let b = m.ncols();
    let svd = try_svd_staged(m, true)?;
    let mut u = svd.u.ok_or(Error::ConvergenceFailure)?;
    let mut v = svd.v_t.ok_or(Error::ConvergenceFailure)?.transpose();
    let s = svd.singular_values;

    let paired = u.ncols().min(v.ncols());
    for i in 0..paired {
        if column_needs_flip(&u.column(i).into_owned()) {
            u.column_mut(i).neg_mut();
            v.column_mut(i).neg_mut();
        }
    }

    if !thin {
        if u.ncols() < a {
            u = complete_orthonormal(&u);
        }
        if v.ncols() < b {
            v = complete_orthonormal(&v);
        }
        for i in paired..a.min(u.ncols()) {
            if column_needs_flip(&u.column(i).into_owned()) {
                u.column_mut(i).neg_mut();
            }
        }
        for i in paired..b.min(v.ncols()) {
            if column_needs_flip(&v.column(i).into_owned()) {
                v.column_mut(i).neg_mut();
            }
        }
    }
    Ok(SvdFactors { u, s, v })
}

fn column_needs_flip(col: &DVector<f64>) -> bool {
    let mut best = 0.0f64;
    let mut sign_neg = false;
    for &x in col.iter() {
        if x.abs() > best {
            best = x.abs();
            sign_neg = x < 0.0;
        }
    }
    sign_neg
}

/// Completes `q` (orthonormal columns) to a square orthogonal matrix by
/// pivoted QR of the orthogonal-complement projector.
fn complete_orthonormal(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    let k = q.ncols();
    if k >= n {
        return q.clone();
    }
    let proj = DMatrix::identity(n, n) - q * q.transpose();
    let candidates = qr_col_pivot(&proj, DEFAULT_QR_RANK_U).q;
    // The projector columns are orthogonal to q only up to roundoff.
    let ext = extend_basis_with(q, &candidates, 2, 1e-8);
    let added = ext.q_new.ncols();
    assert_eq!(k + added, n, "orthonormal completion fell short");
    let mut out = DMatrix::zeros(n, n);
    out.columns_mut(0, k).copy_from(q);
    out.columns_mut(k, added).copy_from(&ext.q_new);
    out
}

/// Split of an ordered singular value sequence at relative tolerance `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSplit {
    /// Kept rank: `#{i : sigma_i > eps * sigma_1}`, at least 1 when
    /// `sigma_1 > 0`.
    pub r: usize,
    /// `sigma_{r+1}`, or 0 when nothing is dropped.
    pub dropped_norm: f64,
}

pub fn truncation_split(s: &DVector<f64>, eps: f64) -> TruncationSplit {
    assert!(eps >= 0.0);
    if s.len() == 0 || s[0] <= 0.0 {
        return TruncationSplit {
            r: 0,
            dropped_norm: 0.0,
        };
    }
    let threshold = eps * s[0];
    let mut r = 0;
    for i in 0..s.len() {
        if s[i] > threshold {
            r = i + 1;
        } else {
            break;
        }
    }
    let r = r.max(1);
    let dropped_norm = if r < s.len() { s[r] } else { 0.0 };
    TruncationSplit { r, dropped_norm }
}

/// `|| Q^T Q - I ||_F`, the orthonormality defect.
pub fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    let k = q.ncols();
    (q.transpose() * q - DMatrix::identity(k, k)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_identity() {
        let m = DMatrix::<f64>::identity(2, 2);
        let f = qr_col_pivot(&m, DEFAULT_QR_RANK_U);
        assert_eq!(f.rank(), 2);
        assert!((f.q.clone() * f.r_unpermuted() - m).norm() < 1e-14);
    }

    #[test]
    fn qr_single_nonzero_column() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let f = qr_col_pivot(&m, DEFAULT_QR_RANK_U);
        assert_eq!(f.rank(), 1);
        assert_eq!(f.perm[0], 1);
        assert!((f.q[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((f.r[(0, 0)].abs() - 2.0).abs() < 1e-14);
        assert!((f.q.clone() * f.r_unpermuted() - m).norm() < 1e-14);
    }

    #[test]
    fn qr_scalar_u_block() {
        // the 1x2 block [-0.5, 0] arising from the scalar seed
        let m = DMatrix::from_row_slice(1, 2, &[-0.5, 0.0]);
        let f = qr_col_pivot(&m, DEFAULT_QR_RANK_U);
        assert_eq!(f.rank(), 1);
        assert!((f.q[(0, 0)].abs() - 1.0).abs() < 1e-15);
        let s = f.r_unpermuted();
        assert!((f.q[(0, 0)] * s[(0, 0)] + 0.5).abs() < 1e-15);
        assert_eq!(s[(0, 1)], 0.0);
    }

    #[test]
    fn qr_zero_matrix_has_rank_zero() {
        let m = DMatrix::<f64>::zeros(3, 2);
        let f = qr_col_pivot(&m, DEFAULT_QR_RANK_U);
        assert_eq!(f.rank(), 0);
        assert_eq!(f.q.ncols(), 0);
    }

    #[test]
    fn extend_simple() {
        let q = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let w = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        let ext = extend_basis(&q, &w);
        assert_eq!(ext.q_new.ncols(), 1);
        assert!((ext.q_new[(1, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((ext.r12[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((ext.r2[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extend_inside_span_drops() {
        let q = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let w = DMatrix::from_column_slice(3, 1, &[2.0, 0.0, 0.0]);
        let ext = extend_basis(&q, &w);
        assert_eq!(ext.q_new.ncols(), 0);
        assert_eq!(ext.r2.nrows(), 0);
        assert!((ext.r12[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn extend_orthogonal_direction() {
        let q = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let w = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 2.0]);
        let ext = extend_basis(&q, &w);
        assert!((ext.q_new[(2, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(ext.r12[(0, 0)].abs() < 1e-14);
        assert!((ext.r2[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_pass_mgs_loses_orthogonality() {
        // w has a dominant component inside span(q); one pass leaves a
        // contaminated direction while two passes clean it up.
        let n = 40;
        let base = DMatrix::from_fn(n, 3, |i, j| ((i * 7 + j * 13) as f64 * 0.37).sin());
        let q = qr_col_pivot(&base, DEFAULT_QR_RANK_U).q;
        let mut w = &q * DMatrix::from_row_slice(3, 1, &[1.0, -2.0, 0.5]);
        for i in 0..n {
            w[(i, 0)] += 1e-11 * (((i * 3 + 1) as f64) * 0.71).cos();
        }
        let one = extend_basis_with(&q, &w, 1, 1e-16);
        let two = extend_basis_with(&q, &w, 2, 1e-16);
        if one.q_new.ncols() == 1 {
            let defect1 = (q.transpose() * &one.q_new).norm();
            let defect2 = (q.transpose() * &two.q_new).norm();
            assert!(defect1 > 1e-9, "single pass unexpectedly clean: {defect1:e}");
            assert!(defect2 < 1e-12, "re-orthogonalization failed: {defect2:e}");
        } else {
            panic!("direction was dropped entirely");
        }
    }

    #[test]
    fn svd_diag() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let f = svd(&m, false).unwrap();
        assert!((f.s[0] - 3.0).abs() < 1e-14);
        assert!((f.s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_scalar_kernel_values() {
        // Y_1 = [[0, -0.5], [-0.5, 0.5]] has singular values (sqrt(5)+-1)/4
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, -0.5, 0.5]);
        let f = svd(&m, false).unwrap();
        let s5 = 5.0f64.sqrt();
        assert!((f.s[0] - (s5 + 1.0) / 4.0).abs() < 1e-14);
        assert!((f.s[1] - (s5 - 1.0) / 4.0).abs() < 1e-14);
        let recon = &f.u * f.sigma_matrix(2, 2) * f.v.transpose();
        assert!((recon - m).norm() < 1e-14);
    }

    #[test]
    fn svd_zero() {
        let m = DMatrix::<f64>::zeros(3, 2);
        let f = svd(&m, false).unwrap();
        assert!(f.s.iter().all(|&x| x == 0.0));
        assert_eq!(f.u.nrows(), 3);
        assert_eq!(f.u.ncols(), 3);
        assert!(orthonormality_defect(&f.u) < 1e-13);
    }

    #[test]
    fn svd_sign_convention_is_reproducible() {
        let m = DMatrix::from_fn(5, 3, |i, j| ((i as f64) - 2.0 * (j as f64)).sin());
        let f1 = svd(&m, false).unwrap();
        let f2 = svd(&m, false).unwrap();
        assert_eq!(f1.u, f2.u);
        assert_eq!(f1.v, f2.v);
        for j in 0..f1.u.ncols() {
            let col = f1.u.column(j);
            let mut best = 0.0;
            let mut val = 0.0;
            for &x in col.iter() {
                if x.abs() > best {
                    best = x.abs();
                    val = x;
                }
            }
            assert!(val >= 0.0);
        }
    }

    #[test]
    fn split_drops_tiny_tail() {
        let s = DVector::from_vec(vec![3.0, 2.0, 1e-16]);
        let t = truncation_split(&s, 1e-15);
        assert_eq!(t.r, 2);
        assert_eq!(t.dropped_norm, 1e-16);
    }

    #[test]
    fn split_keeps_everything_above_threshold() {
        let s = DVector::from_vec(vec![1.0, 0.5]);
        let t = truncation_split(&s, 1e-15);
        assert_eq!(t.r, 2);
        assert_eq!(t.dropped_norm, 0.0);
    }

    #[test]
    fn split_eps_zero_drops_exact_zeros() {
        let s = DVector::from_vec(vec![2.0, 1.0, 0.0, 0.0]);
        let t = truncation_split(&s, 0.0);
        assert_eq!(t.r, 2);
        assert_eq!(t.dropped_norm, 0.0);
    }

    #[test]
    fn split_never_empty_when_positive() {
        let s = DVector::from_vec(vec![1e-30]);
        let t = truncation_split(&s, 1e-2);
        assert_eq!(t.r, 1);
    }
}
