//! Problem model for `A^T X + X A - X G X + H = 0` with `G = B R^-1 B^T`
//! and `H = C^T C`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels;
use crate::sparse::CscMatrix;

/// The system matrix, kept sparse when the input was sparse.
#[derive(Debug, Clone)]
pub enum CoeffMatrix {
    Dense(DMatrix<f64>),
    Sparse(CscMatrix),
}

impl CoeffMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            CoeffMatrix::Dense(m) => m.nrows(),
            CoeffMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            CoeffMatrix::Dense(m) => m.ncols(),
            CoeffMatrix::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, CoeffMatrix::Sparse(_))
    }

    /// `A * x` on a dense block.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            CoeffMatrix::Dense(m) => m * x,
            CoeffMatrix::Sparse(m) => m.mul_dense(x),
        }
    }

    /// `A^T * x` on a dense block.
    pub fn mul_transpose_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            CoeffMatrix::Dense(m) => m.transpose() * x,
            CoeffMatrix::Sparse(m) => m.mul_transpose_dense(x),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            CoeffMatrix::Dense(m) => m.clone(),
            CoeffMatrix::Sparse(m) => m.to_dense(),
        }
    }
}

/// A continuous-time algebraic Riccati equation instance.
#[derive(Debug, Clone)]
pub struct CareProblem {
    pub a: CoeffMatrix,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
}

/// Outcome of [`validate_problem`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub rank_b: usize,
    pub rank_c: usize,
    pub r_symmetry_defect: f64,
    pub r_min_eigenvalue: f64,
    pub warnings: Vec<String>,
}

impl CareProblem {
    /// Builds a problem instance; dimension consistency is enforced here,
    /// rank and definiteness checks live in [`validate_problem`].
    pub fn new(
        a: CoeffMatrix,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        r: Option<DMatrix<f64>>,
        gamma: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "A",
                expected: format!("{n}x{n}"),
                found: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                context: "B",
                expected: format!("{n}xm with m >= 1"),
                found: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "C",
                expected: format!("lx{n} with l >= 1"),
                found: format!("{}x{}", c.nrows(), c.ncols()),
            });
        }
        let m = b.ncols();
        let r = r.unwrap_or_else(|| DMatrix::identity(m, m));
        if r.nrows() != m || r.ncols() != m {
            return Err(Error::DimensionMismatch {
                context: "R",
                expected: format!("{m}x{m}"),
                found: format!("{}x{}", r.nrows(), r.ncols()),
            });
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::DegenerateProblem("gamma must be positive and finite"));
        }
        Ok(CareProblem { a, b, c, r, gamma })
    }

    pub fn from_dense(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        r: Option<DMatrix<f64>>,
        gamma: f64,
    ) -> Result<Self> {
        CareProblem::new(CoeffMatrix::Dense(a), b, c, r, gamma)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn l(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_weight_identity(&self) -> bool {
        let m = self.m();
        self.r == DMatrix::identity(m, m)
    }

    /// `G = B R^-1 B^T`, densified. Desk-scale use only.
    pub fn g_dense(&self) -> Result<DMatrix<f64>> {
        let chol = self
            .r
            .clone()
            .cholesky()
            .ok_or(Error::WeightNotSpd)?;
        let rinv_bt = chol.solve(&self.b.transpose());
        Ok(&self.b * rinv_bt)
    }

    /// `H = C^T C`, densified. Desk-scale use only.
    pub fn h_dense(&self) -> DMatrix<f64> {
        self.c.transpose() * &self.c
    }
}

/// Checks full column rank of `B` and `C^T` and positive definiteness of the
/// weight. Rank decisions use the pivoted-QR threshold of the kernels module.
pub fn validate_problem(p: &CareProblem) -> Result<ValidationReport> {
    let n = p.n();
    let m = p.m();
    let l = p.l();

    let qr_b = kernels::qr_col_pivot(&p.b, kernels::DEFAULT_QR_RANK_U);
    if qr_b.rank() < m {
        return Err(Error::RankDeficient {
            which: "B",
            expected: m,
            found: qr_b.rank(),
        });
    }
    let qr_ct = kernels::qr_col_pivot(&p.c.transpose(), kernels::DEFAULT_QR_RANK_U);
    if qr_ct.rank() < l {
        return Err(Error::RankDeficient {
            which: "C",
            expected: l,
            found: qr_ct.rank(),
        });
    }

    let r_symmetry_defect = (&p.r - p.r.transpose()).norm();
    if r_symmetry_defect > 1e-12 * p.r.norm().max(1.0) {
        return Err(Error::WeightNotSpd);
    }
    let r_sym = (&p.r + p.r.transpose()) * 0.5;
    if r_sym.clone().cholesky().is_none() {
        return Err(Error::WeightNotSpd);
    }
    let r_min_eigenvalue = r_sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(r_min_eigenvalue > 0.0) {
        return Err(Error::WeightNotSpd);
    }

    let mut warnings = Vec::new();
    if m + l > n / 2 {
        warnings.push(format!(
            "m + l = {} is large relative to n = {}; low-rank structure may be weak",
            m + l,
            n
        ));
    }
    Ok(ValidationReport {
        rank_b: qr_b.rank(),
        rank_c: qr_ct.rank(),
        r_symmetry_defect,
        r_min_eigenvalue,
        warnings,
    })
}

/// Folds a general SPD weight into `B` so that `G = B' B'^T`:
/// with `R = L L^T`, `B' = B L^-T`. Identity weights pass through unchanged.
pub fn fold_weight(p: &CareProblem) -> Result<CareProblem> {
    if p.is_weight_identity() {
        return Ok(p.clone());
    }
    let m = p.m();
    let r_sym = (&p.r + p.r.transpose()) * 0.5;
    let chol = r_sym.cholesky().ok_or(Error::WeightNotSpd)?;
    // B' = B L^-T  <=>  B'^T = L^-1 B^T
    let bt = p.b.transpose();
    let folded_bt = chol
        .l()
        .solve_lower_triangular(&bt)
        .ok_or(Error::WeightNotSpd)?;
    Ok(CareProblem {
        a: p.a.clone(),
        b: folded_bt.transpose(),
        c: p.c.clone(),
        r: DMatrix::identity(m, m),
        gamma: p.gamma,
    })
}

/// Dense symmetric min-eigenvalue helper used by invariants and tests.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral norm via singular values (desk scale).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    crate::kernels::singular_values(m)
        .map(|s| s.iter().cloned().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

pub fn vec_to_diag(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..v.len().min(rows).min(cols) {
        out[(i, i)] = v[i];
    }
    out
}
