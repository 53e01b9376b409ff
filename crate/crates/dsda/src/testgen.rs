//! Seeded random instance generators and small direct oracles for the check
//! suites. Everything here is deterministic given the seed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::problem::CareProblem;

/// Version of the generator; recorded in run metadata so check suites remain
/// comparable across releases.
pub const GENERATOR_VERSION: u32 = 1;

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Box-Muller keeps us independent of rand_distr.
    DMatrix::from_fn(rows, cols, |_, _| {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    })
}

/// Stable instance: `A = T diag(lambda) T^-1` with eigenvalues drawn from
/// `(-1, -0.02)` and Gaussian `B`, `C`. The transform `T` gets explicit
/// singular values in `[1, 3]` so the instance conditioning (and with it
/// the attainable residual floor) stays moderate. Stability makes the pair
/// trivially stabilizable and detectable.
pub fn stable_instance(seed: u64, n: usize, m: usize, l: usize, gamma: f64) -> CareProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(1));
    let t = {
        let q1 = orthogonal_factor(&mut rng, n);
        let q2 = orthogonal_factor(&mut rng, n);
        let sv = DVector::from_fn(n, |i, _| {
            3.0f64.powf(i as f64 / (n.max(2) - 1) as f64)
        });
        scale_cols(&q1, &sv) * q2.transpose()
    };
    let lambda = DVector::from_fn(n, |_, _| -rng.gen_range(0.02..1.0));
    let a = similarity(&t, &lambda, 1.0);
    let b = gaussian(&mut rng, n, m);
    let c = gaussian(&mut rng, l, n);
    CareProblem::from_dense(a, b, c, None, gamma).expect("generated dimensions are consistent")
}

fn orthogonal_factor(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = gaussian(rng, n, n);
    crate::kernels::qr_col_pivot(&g, crate::kernels::DEFAULT_QR_RANK_U).q
}

/// `scale * T diag(lambda) T^-1` computed as `((T^T)^-1 (T diag)^T)^T`.
fn similarity(t: &DMatrix<f64>, lambda: &DVector<f64>, scale: f64) -> DMatrix<f64> {
    let scaled = scale_cols(t, lambda);
    let at = t
        .transpose()
        .lu()
        .solve(&scaled.transpose())
        .expect("random T is invertible");
    at.transpose() * scale
}

/// Mixed-spectrum instance: `A = (1/100) T diag(L1, L2) T^-1` where `L1 > 0`
/// has `n1` entries and `L2 < 0` has `n2`, magnitudes uniform in `(0, 1)`;
/// `B` is `n x m`, `C` is `l x n`, both Gaussian. With the defaults
/// `(100, 3, 3, 3)` this reproduces the random benchmark family with an
/// unstable system matrix.
pub fn mixed_spectrum_instance(
    seed: u64,
    n1: usize,
    n2: usize,
    m: usize,
    l: usize,
    gamma: f64,
) -> CareProblem {
    let n = n1 + n2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x51_7c_c1b7).wrapping_add(3));
    let t = gaussian(&mut rng, n, n);
    let lambda = DVector::from_fn(n, |i, _| {
        let mag: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        if i < n1 {
            mag
        } else {
            -mag
        }
    });
    let a = similarity(&t, &lambda, 1.0 / 100.0);
    let b = gaussian(&mut rng, n, m);
    let c = gaussian(&mut rng, l, n);
    CareProblem::from_dense(a, b, c, None, gamma).expect("generated dimensions are consistent")
}

fn scale_cols(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        out.column_mut(j).scale_mut(w[j]);
    }
    out
}

/// Direct dense Lyapunov solve of `A^T X + X A + Q = 0` through the
/// Kronecker-vectorized linear system. Independent of every doubling path;
/// test oracle only.
pub fn lyapunov_kron_oracle(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let nn = n * n;
    // vec(A^T X + X A) = (I kron A^T + A^T kron I) vec(X)
    let mut big = DMatrix::zeros(nn, nn);
    for col_block in 0..n {
        for inner in 0..n {
            // I kron A^T
            for row in 0..n {
                big[(col_block * n + row, col_block * n + inner)] += a[(inner, row)];
            }
            // A^T kron I: block (I, J) carries A^T[I, J] = a[J, I]
            for d in 0..n {
                big[(col_block * n + d, inner * n + d)] += a[(inner, col_block)];
            }
        }
    }
    let rhs = DVector::from_fn(nn, |k, _| -q[(k % n, k / n)]);
    let sol = big.lu().solve(&rhs).expect("Lyapunov operator nonsingular");
    DMatrix::from_fn(n, n, |i, j| sol[j * n + i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_instance_is_stable_and_reproducible() {
        let p1 = stable_instance(42, 8, 2, 1, 0.1);
        let p2 = stable_instance(42, 8, 2, 1, 0.1);
        assert_eq!(p1.a.to_dense(), p2.a.to_dense());
        assert_eq!(p1.b, p2.b);
        for e in p1.a.to_dense().complex_eigenvalues().iter() {
            assert!(e.re < 0.0);
        }
    }

    #[test]
    fn mixed_spectrum_has_both_signs() {
        let p = mixed_spectrum_instance(7, 5, 2, 2, 2, 1e-3);
        let eigs = p.a.to_dense().complex_eigenvalues();
        assert!(eigs.iter().any(|e| e.re > 0.0));
        assert!(eigs.iter().any(|e| e.re < 0.0));
    }

    #[test]
    fn kron_oracle_satisfies_the_equation() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.4, 0.0, 0.0, -2.0, 0.3, 0.1, 0.0, -1.5]);
        let q = {
            let c = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -1.0, 0.5, 1.0, 0.0]);
            c.transpose() * c
        };
        let x = lyapunov_kron_oracle(&a, &q);
        let res = a.transpose() * &x + &x * &a + &q;
        assert!(res.norm() < 1e-12);
    }
}
