//! Factored symmetric positive semi-definite matrices
//! `scale * Q * diag(d)^2 * Q^T` with orthonormal `Q`.

use nalgebra::{DMatrix, DVector};

use crate::kernels;

#[derive(Debug, Clone)]
pub struct LowRankGram {
    /// Orthonormal columns, `n x r`.
    pub q: DMatrix<f64>,
    /// Positive factor diagonal, length `r`; the represented matrix carries
    /// `d` squared.
    pub d: DVector<f64>,
    /// Overall scale, `2 * gamma` for the doubling iterates.
    pub scale: f64,
}

impl LowRankGram {
    pub fn new(q: DMatrix<f64>, d: DVector<f64>, scale: f64) -> Self {
        assert_eq!(q.ncols(), d.len());
        LowRankGram { q, d, scale }
    }

    pub fn zero(n: usize) -> Self {
        LowRankGram {
            q: DMatrix::zeros(n, 0),
            d: DVector::zeros(0),
            scale: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    /// Eigenvalues of the represented matrix: `scale * d_i^2`, nonnegative
    /// by construction for `scale >= 0`.
    pub fn eigenvalues(&self) -> DVector<f64> {
        self.d.map(|x| self.scale * x * x)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let weighted = scale_columns(&self.q, &self.eigenvalues());
        &weighted * self.q.transpose()
    }

    /// `M * x` without densifying.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let t = self.q.transpose() * x;
        let t = scale_rows(&t, &self.eigenvalues());
        &self.q * t
    }

    /// Frobenius norm; exact because `Q` has orthonormal columns.
    pub fn frobenius_norm(&self) -> f64 {
        self.eigenvalues().norm()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        kernels::orthonormality_defect(&self.q)
    }

    /// `|| self - other ||_F` evaluated in the joint column span, never
    /// forming an `n x n` matrix.
    pub fn sub_frobenius_norm(&self, other: &LowRankGram) -> f64 {
        assert_eq!(self.n(), other.n());
        let s = self.rank() + other.rank();
        if s == 0 {
            return 0.0;
        }
        let mut joint = DMatrix::zeros(self.n(), s);
        joint.columns_mut(0, self.rank()).copy_from(&self.q);
        joint.columns_mut(self.rank(), other.rank()).copy_from(&other.q);
        let qr = joint.qr();
        let rfac = qr.r();
        let mut core = DMatrix::zeros(s, s);
        let ev_a = self.eigenvalues();
        let ev_b = other.eigenvalues();
        for i in 0..self.rank() {
            core[(i, i)] = ev_a[i];
        }
        for i in 0..other.rank() {
            let k = self.rank() + i;
            core[(k, k)] = -ev_b[i];
        }
        (&rfac * core * rfac.transpose()).norm()
    }

    /// Smallest eigenvalue of `self - other` via the joint basis.
    pub fn sub_min_eigenvalue(&self, other: &LowRankGram) -> f64 {
        assert_eq!(self.n(), other.n());
        let s = self.rank() + other.rank();
        if s == 0 {
            return 0.0;
        }
        let mut joint = DMatrix::zeros(self.n(), s);
        joint.columns_mut(0, self.rank()).copy_from(&self.q);
        joint.columns_mut(self.rank(), other.rank()).copy_from(&other.q);
        let qr = joint.qr();
        let rfac = qr.r();
        let mut core = DMatrix::zeros(s, s);
        let ev_a = self.eigenvalues();
        let ev_b = other.eigenvalues();
        for i in 0..self.rank() {
            core[(i, i)] = ev_a[i];
        }
        for i in 0..other.rank() {
            let k = self.rank() + i;
            core[(k, k)] = -ev_b[i];
        }
        let small = &rfac * core * rfac.transpose();
        let lambda = crate::problem::min_symmetric_eigenvalue(&small);
        // The difference has rank at most s; for s < n its kernel
        // contributes zero eigenvalues.
        if s < self.n() {
            lambda.min(0.0)
        } else {
            lambda
        }
    }
}

fn scale_columns(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        out.column_mut(j).scale_mut(w[j]);
    }
    out
}

fn scale_rows(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        out.row_mut(i).scale_mut(w[i]);
    }
    out
}
