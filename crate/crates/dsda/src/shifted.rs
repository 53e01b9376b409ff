//! Reusable factorization of `A_gamma = A - gamma*I` and the Cayley operator
//! `A_tilde = I + 2*gamma*A_gamma^-1` it induces.
//!
//! The factorization is computed once; every application is a factored
//! solve. Dense problems (or sparse ones below the dense threshold) use an
//! LU pair for plain and transposed solves, large sparse problems use a
//! sparse LU with fill-reducing ordering.

use std::sync::atomic::{AtomicU64, Ordering};

use faer::linalg::solvers::Solve;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::problem::{CareProblem, CoeffMatrix};

enum Backend {
    Dense {
        lu: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        lu_t: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    },
    SparseLu {
        lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    },
}

pub struct ShiftedOperator {
    n: usize,
    gamma: f64,
    backend: Backend,
    solves: AtomicU64,
}

impl std::fmt::Debug for ShiftedOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftedOperator")
            .field("n", &self.n)
            .field("gamma", &self.gamma)
            .field("sparse", &matches!(self.backend, Backend::SparseLu { .. }))
            .field("solves", &self.solve_count())
            .finish()
    }
}

/// Builds the shifted-operator factorization for a problem.
pub fn build_shifted_operator(p: &CareProblem, dense_threshold: usize) -> Result<ShiftedOperator> {
    ShiftedOperator::new(&p.a, p.gamma, dense_threshold)
}

impl ShiftedOperator {
    pub fn new(a: &CoeffMatrix, gamma: f64, dense_threshold: usize) -> Result<Self> {
        let n = a.nrows();
        let backend = match a {
            CoeffMatrix::Sparse(m) if n > dense_threshold => {
                if !m.values_finite() {
                    return Err(Error::DegenerateProblem("non-finite entries in A"));
                }
                let shifted = m.shift_diagonal(gamma);
                let trips: Vec<faer::sparse::Triplet<usize, usize, f64>> = shifted
                    .triplets()
                    .into_iter()
                    .map(|(i, j, v)| faer::sparse::Triplet::new(i, j, v))
                    .collect();
                let fm = faer::sparse::SparseColMat::try_new_from_triplets(n, n, &trips)
                    .map_err(|_| Error::SingularShift)?;
                let lu = fm.sp_lu().map_err(|_| Error::SingularShift)?;
                Backend::SparseLu { lu }
            }
            _ => {
                let dense = a.to_dense();
                let shifted = &dense - DMatrix::from_diagonal_element(n, n, gamma);
                let lu = shifted.clone().lu();
                let lu_t = shifted.transpose().lu();
                check_dense_lu(&lu, n)?;
                Backend::Dense { lu, lu_t }
            }
        };
        let op = ShiftedOperator {
            n,
            gamma,
            backend,
            solves: AtomicU64::new(0),
        };
        op.probe_nonsingular()?;
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of single-column factored solves performed so far.
    pub fn solve_count(&self) -> u64 {
        self.solves.load(Ordering::Relaxed)
    }

    /// Solves `A_gamma * X = B` (or `A_gamma^T * X = B`).
    pub fn solve_shifted(&self, b: &DMatrix<f64>, transpose: bool) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.n, "right-hand side has wrong row count");
        self.solves
            .fetch_add(b.ncols() as u64, Ordering::Relaxed);
        match &self.backend {
            Backend::Dense { lu, lu_t } => {
                let f = if transpose { lu_t } else { lu };
                f.solve(b).expect("factorization validated at construction")
            }
            Backend::SparseLu { lu } => {
                let rhs = faer::Mat::<f64>::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)]);
                let sol = if transpose {
                    lu.solve_transpose(&rhs)
                } else {
                    lu.solve(&rhs)
                };
                DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| sol[(i, j)])
            }
        }
    }

    /// One application of `A_tilde = I + 2*gamma*A_gamma^-1` (or its
    /// transpose): exactly one factored solve on the block.
    pub fn apply_a_tilde(&self, x: &DMatrix<f64>, transpose: bool) -> DMatrix<f64> {
        let solved = self.solve_shifted(x, transpose);
        x + solved * (2.0 * self.gamma)
    }

    /// `e` successive applications of `A_tilde`; `e` must be a power of two
    /// (it is `2^j` in the doubling step). Costs exactly `e` factored solves
    /// per column.
    pub fn apply_a_tilde_power(&self, x: &DMatrix<f64>, e: u64, transpose: bool) -> DMatrix<f64> {
        assert!(e.is_power_of_two(), "exponent must be a power of two");
        let mut out = x.clone();
        for _ in 0..e {
            out = self.apply_a_tilde(&out, transpose);
        }
        out
    }

    /// Densified `A_tilde^e`; desk scale only.
    pub fn a_tilde_dense_power(&self, e: u64) -> DMatrix<f64> {
        self.apply_a_tilde_power(&DMatrix::identity(self.n, self.n), e, false)
    }

    fn probe_nonsingular(&self) -> Result<()> {
        let probe = DMatrix::from_fn(self.n, 1, |i, _| 1.0 + (i as f64) / (self.n as f64 + 1.0));
        let sol = self.solve_shifted(&probe, false);
        self.solves.fetch_sub(1, Ordering::Relaxed);
        let finite = sol.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::SingularShift);
        }
        // Cheap residual check against gross singularity.
        let norm_ratio = sol.norm() / probe.norm();
        if norm_ratio > 1.0 / (f64::EPSILON * 1e2) {
            return Err(Error::SingularShift);
        }
        Ok(())
    }
}

fn check_dense_lu(
    lu: &nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
) -> Result<()> {
    let u = lu.u();
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..n {
        let d = u[(i, i)].abs();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    if !(dmin > dmax * f64::EPSILON * n as f64) {
        return Err(Error::SingularShift);
    }
    Ok(())
}
