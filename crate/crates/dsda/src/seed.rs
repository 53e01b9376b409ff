//! Doubling seed: the low-rank initial data `U_0, V_0, Y_0, T_0` always, and
//! the dense `A_0, G_0, H_0` triple at desk scale for the classic recursion.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::problem::CareProblem;
use crate::shifted::ShiftedOperator;

/// Dense seed of the coupled recursion, only materialized at desk scale.
#[derive(Debug, Clone)]
pub struct DenseSeed {
    pub a0: DMatrix<f64>,
    pub g0: DMatrix<f64>,
    pub h0: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SdaSeed {
    /// `A_gamma^-1 B`, `n x m`.
    pub u0: DMatrix<f64>,
    /// `A_gamma^-T C^T`, `n x l`.
    pub v0: DMatrix<f64>,
    /// `B^T A_gamma^-T C^T`, `m x l`.
    pub y0: DMatrix<f64>,
    /// `U_0^T V_0`, `m x l`.
    pub t0: DMatrix<f64>,
    pub dense: Option<DenseSeed>,
}

/// Computes the seed. The dense triple requires `K_gamma = A_gamma^T +
/// H A_gamma^-1 G` to be nonsingular and is produced only for
/// `n <= dense_threshold`.
pub fn sda_seed(
    p: &CareProblem,
    op: &ShiftedOperator,
    dense_threshold: usize,
) -> Result<SdaSeed> {
    let n = p.n();
    let u0 = op.solve_shifted(&p.b, false);
    let ct = p.c.transpose();
    let v0 = op.solve_shifted(&ct, true);
    let y0 = p.b.transpose() * &v0;
    let t0 = u0.transpose() * &v0;

    let dense = if n <= dense_threshold {
        let g = p.g_dense()?;
        let h = p.h_dense();
        // W = A_gamma^-1 G
        let w = op.solve_shifted(&g, false);
        let k_gamma = {
            let a_dense = p.a.to_dense();
            let a_gamma_t = a_dense.transpose() - DMatrix::from_diagonal_element(n, n, p.gamma);
            a_gamma_t + &h * &w
        };
        let lu = k_gamma.clone().lu();
        let lu_t = k_gamma.transpose().lu();
        let eye = DMatrix::identity(n, n);
        let k_inv_t = lu_t.solve(&eye).ok_or(Error::SingularKGamma)?;
        if !k_inv_t.iter().all(|v| v.is_finite())
            || k_inv_t.norm() > 1.0 / (f64::EPSILON * 1e2)
        {
            return Err(Error::SingularKGamma);
        }
        let a0 = &eye + &k_inv_t * (2.0 * p.gamma);
        // G_0 = 2 gamma W K_gamma^-1  =>  G_0^T = 2 gamma K_gamma^-T W^T
        let g0 = (lu_t.solve(&(w.transpose() * (2.0 * p.gamma)))).ok_or(Error::SingularKGamma)?;
        let g0 = g0.transpose();
        // H_0 = 2 gamma K_gamma^-1 (H A_gamma^-1); H A_gamma^-1 = (A_gamma^-T H)^T
        let z = op.solve_shifted(&h, true).transpose();
        let h0 = lu.solve(&(z * (2.0 * p.gamma))).ok_or(Error::SingularKGamma)?;
        Some(DenseSeed { a0, g0, h0 })
    } else {
        None
    };

    Ok(SdaSeed { u0, v0, y0, t0, dense })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shifted::build_shifted_operator;

    fn scalar_problem(b: f64, c: f64) -> CareProblem {
        CareProblem::from_dense(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            None,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn scalar_seed_values() {
        // a = -1, b = c = 1, gamma = 1:
        // K_gamma = -2.5, A0 = 0.2, G0 = H0 = 0.4, U0 = V0 = Y0 = -0.5, T0 = 0.25
        let p = scalar_problem(1.0, 1.0);
        let op = build_shifted_operator(&p, 500).unwrap();
        let s = sda_seed(&p, &op, 500).unwrap();
        assert!((s.u0[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((s.v0[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((s.y0[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((s.t0[(0, 0)] - 0.25).abs() < 1e-15);
        let d = s.dense.unwrap();
        assert!((d.a0[(0, 0)] - 0.2).abs() < 1e-14);
        assert!((d.g0[(0, 0)] - 0.4).abs() < 1e-14);
        assert!((d.h0[(0, 0)] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn zero_c_zeroes_the_h_side() {
        let p = scalar_problem(1.0, 0.0);
        let op = build_shifted_operator(&p, 500).unwrap();
        let s = sda_seed(&p, &op, 500).unwrap();
        assert_eq!(s.v0[(0, 0)], 0.0);
        assert_eq!(s.y0[(0, 0)], 0.0);
        assert_eq!(s.dense.unwrap().h0[(0, 0)], 0.0);
    }

    #[test]
    fn zero_b_zeroes_the_g_side() {
        let p = scalar_problem(0.0, 1.0);
        let op = build_shifted_operator(&p, 500).unwrap();
        let s = sda_seed(&p, &op, 500).unwrap();
        assert_eq!(s.u0[(0, 0)], 0.0);
        assert_eq!(s.t0[(0, 0)], 0.0);
        assert_eq!(s.dense.unwrap().g0[(0, 0)], 0.0);
    }

    #[test]
    fn seed_matrices_are_symmetric_and_a0_stable() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 12;
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
        for i in 0..n {
            a[(i, i)] -= 2.0; // diagonally dominant stable
        }
        let b = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
        let c = DMatrix::from_fn(2, n, |_, _| rng.gen_range(-1.0..1.0));
        let p = CareProblem::from_dense(a, b, c, None, 0.5).unwrap();
        let op = build_shifted_operator(&p, 500).unwrap();
        let s = sda_seed(&p, &op, 500).unwrap();
        let d = s.dense.unwrap();
        assert!((&d.g0 - d.g0.transpose()).norm() <= 1e-14 * d.g0.norm());
        assert!((&d.h0 - d.h0.transpose()).norm() <= 1e-14 * d.h0.norm());
        let eigs = d.a0.complex_eigenvalues();
        for e in eigs.iter() {
            assert!(e.norm() < 1.0, "A0 eigenvalue outside unit disc: {e}");
        }
    }
}
