//! Invariant-subspace oracle: the stabilizing solution from the stable
//! subspace of the Hamiltonian matrix `[[A, -G], [-H, -A^T]]`, computed via
//! the matrix sign function with determinant scaling.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels;
use crate::problem::CareProblem;

#[derive(Debug, Clone)]
pub struct HamiltonianSolution {
    pub x: DMatrix<f64>,
    /// `||X - X^T|| / ||X||` before symmetrization.
    pub asymmetry: f64,
    /// Smallest eigenvalue of the symmetrized solution.
    pub min_eigenvalue: f64,
    pub sign_iterations: usize,
}

impl HamiltonianSolution {
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol * self.x.norm().max(1.0)
    }
}

/// Solves the equation densely from the Hamiltonian stable invariant
/// subspace. Fails with [`Error::ImaginaryAxisEigenvalues`] when the sign
/// iteration cannot converge and [`Error::SingularW1`] when the subspace
/// basis has a singular leading block.
pub fn hamiltonian_care_oracle(p: &CareProblem) -> Result<HamiltonianSolution> {
    let n = p.n();
    let g = p.g_dense()?;
    let h = p.h_dense();
    let a = p.a.to_dense();

    let two_n = 2 * n;
    let mut ham = DMatrix::zeros(two_n, two_n);
    ham.view_mut((0, 0), (n, n)).copy_from(&a);
    ham.view_mut((0, n), (n, n)).copy_from(&(-&g));
    ham.view_mut((n, 0), (n, n)).copy_from(&(-&h));
    ham.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let (sign, iters) = matrix_sign(&ham)?;

    // Projector onto the stable subspace; rank n for a dichotomic spectrum.
    let proj = (DMatrix::identity(two_n, two_n) - sign) * 0.5;
    let qr = kernels::qr_col_pivot(&proj, kernels::DEFAULT_QR_RANK_U);
    if qr.rank() < n {
        return Err(Error::ImaginaryAxisEigenvalues);
    }
    let basis = qr.q.columns(0, n).into_owned();
    let w1 = basis.rows(0, n).into_owned();
    let w2 = basis.rows(n, n).into_owned();

    let lu = w1.lu();
    let x_raw = match lu.solve(&DMatrix::identity(n, n)) {
        Some(w1_inv) => {
            if !w1_inv.iter().all(|v| v.is_finite()) {
                return Err(Error::SingularW1);
            }
            let u = lu.u();
            let mut dmin = f64::INFINITY;
            let mut dmax = 0.0f64;
            for i in 0..n {
                dmin = dmin.min(u[(i, i)].abs());
                dmax = dmax.max(u[(i, i)].abs());
            }
            if dmin <= dmax * f64::EPSILON * (n as f64) {
                return Err(Error::SingularW1);
            }
            &w2 * w1_inv
        }
        None => return Err(Error::SingularW1),
    };

    let asymmetry = {
        let d = (&x_raw - x_raw.transpose()).norm();
        let nn = x_raw.norm();
        if nn > 0.0 { d / nn } else { 0.0 }
    };
    let x = (&x_raw + x_raw.transpose()) * 0.5;
    let min_eigenvalue = crate::problem::min_symmetric_eigenvalue(&x);
    Ok(HamiltonianSolution {
        x,
        asymmetry,
        min_eigenvalue,
        sign_iterations: iters,
    })
}

/// Newton iteration `Z <- (c Z + (c Z)^-1) / 2` with determinant scaling.
fn matrix_sign(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
    let n = m.nrows();
    let mut z = m.clone();
    let tol = (n as f64) * 1e-14;
    let max_iter = 90;
    for it in 0..max_iter {
        let lu = z.clone().lu();
        let det = lu.determinant().abs();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::ImaginaryAxisEigenvalues);
        }
        // determinant scaling accelerates the early phase
        let c = det.powf(-1.0 / n as f64);
        let zc = &z * c;
        let zc_inv = zc
            .clone()
            .lu()
            .solve(&DMatrix::identity(n, n))
            .ok_or(Error::ImaginaryAxisEigenvalues)?;
        let next = (&zc + &zc_inv) * 0.5;
        let delta = (&next - &z).norm();
        let scale = next.norm();
        z = next;
        if delta <= tol * scale {
            // two unscaled cleanup sweeps
            for _ in 0..2 {
                let inv = z
                    .clone()
                    .lu()
                    .solve(&DMatrix::identity(n, n))
                    .ok_or(Error::ImaginaryAxisEigenvalues)?;
                z = (&z + &inv) * 0.5;
            }
            let defect = (&z * &z - DMatrix::identity(n, n)).norm();
            if defect > 1e-6 * (n as f64) {
                return Err(Error::ImaginaryAxisEigenvalues);
            }
            return Ok((z, it + 1));
        }
    }
    Err(Error::ImaginaryAxisEigenvalues)
}
