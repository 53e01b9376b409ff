//! Classic coupled doubling recursion on dense `(A_k, G_k, H_k)` triples.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::problem::CareProblem;
use crate::seed::sda_seed;
use crate::shifted::build_shifted_operator;

const PENCIL_COND_LIMIT: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct SdaState {
    pub a: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub k: usize,
}

impl SdaState {
    pub fn new(a: DMatrix<f64>, g: DMatrix<f64>, h: DMatrix<f64>) -> Self {
        SdaState { a, g, h, k: 0 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SdaHistory {
    /// `||H_{k+1} - H_k||_F / ||H_{k+1}||_F` per step.
    pub increments: Vec<f64>,
    /// `||A_k||_F` per step (after the step).
    pub a_norms: Vec<f64>,
}

/// One step of the coupled recursion:
/// `A' = A W^-1 A`, `G' = G + A W^-1 G A^T`, `H' = H + A^T H W^-1 A`
/// with `W = I + G H`.
pub fn sda_step(s: &SdaState) -> Result<SdaState> {
    let n = s.a.nrows();
    let w = DMatrix::identity(n, n) + &s.g * &s.h;
    let cond = {
        let sv = crate::kernels::singular_values(&w)
            .map_err(|_| Error::NearSingularPencil { cond: f64::INFINITY })?;
        let mx = sv.iter().cloned().fold(0.0, f64::max);
        let mn = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if mn == 0.0 { f64::INFINITY } else { mx / mn }
    };
    if cond > PENCIL_COND_LIMIT {
        return Err(Error::NearSingularPencil { cond });
    }
    let lu = w.lu();
    let winv_a = lu.solve(&s.a).ok_or(Error::NearSingularPencil { cond })?;
    let winv_g = lu.solve(&s.g).ok_or(Error::NearSingularPencil { cond })?;

    let a_next = &s.a * &winv_a;
    let g_next = &s.g + &s.a * &winv_g * s.a.transpose();
    let h_next = &s.h + s.a.transpose() * (&s.h * &winv_a);
    Ok(SdaState {
        a: a_next,
        g: symmetrize(&g_next),
        h: symmetrize(&h_next),
        k: s.k + 1,
    })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Dense doubling solve of the continuous-time equation. Iterates the
/// coupled recursion from the Cayley seed until the `H` increment is below
/// `tol` (relative) and returns `(X, Y, history)` with `X = lim H_k` and
/// `Y = lim G_k`.
pub fn sda_solve_care(
    p: &CareProblem,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, SdaHistory)> {
    let op = build_shifted_operator(p, p.n())?;
    let seed = sda_seed(p, &op, p.n())?;
    let dense = seed.dense.expect("dense seed requested at problem size");
    sda_iterate(
        SdaState::new(dense.a0, dense.g0, dense.h0),
        tol,
        max_iter,
    )
}

/// Dense doubling solve of the discrete-time equation
/// `-X + A^T X (I + G X)^-1 A + H = 0` seeded directly with `(A, G, H)`.
pub fn sda_solve_dare(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, SdaHistory)> {
    sda_iterate(
        SdaState::new(a.clone(), g.clone(), h.clone()),
        tol,
        max_iter,
    )
}

fn sda_iterate(
    mut s: SdaState,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, SdaHistory)> {
    let mut hist = SdaHistory::default();
    for _ in 0..max_iter {
        let next = sda_step(&s)?;
        let denom = next.h.norm();
        let increment = if denom > 0.0 {
            (&next.h - &s.h).norm() / denom
        } else {
            (&next.h - &s.h).norm()
        };
        hist.increments.push(increment);
        hist.a_norms.push(next.a.norm());
        s = next;
        if increment <= tol {
            return Ok((s.h, s.g, hist));
        }
    }
    Err(Error::MaxIterations(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn scalar_state() -> SdaState {
        SdaState::new(
            DMatrix::from_element(1, 1, 0.2),
            DMatrix::from_element(1, 1, 0.4),
            DMatrix::from_element(1, 1, 0.4),
        )
    }

    /// Independent scalar evaluation of the coupled recursion.
    fn scalar_sda(mut a: f64, mut g: f64, mut h: f64, steps: usize) -> (f64, f64, f64) {
        for _ in 0..steps {
            let w = 1.0 + g * h;
            let (a1, g1, h1) = (a * a / w, g + a * g * a / w, h + a * h * a / w);
            a = a1;
            g = g1;
            h = h1;
        }
        (a, g, h)
    }

    #[test]
    fn scalar_first_step() {
        let s1 = sda_step(&scalar_state()).unwrap();
        let (ea, eg, eh) = scalar_sda(0.2, 0.4, 0.4, 1);
        assert!((s1.h[(0, 0)] - eh).abs() < 1e-15);
        assert!((s1.a[(0, 0)] - ea).abs() < 1e-15);
        assert!((s1.g[(0, 0)] - eg).abs() < 1e-15);
        // frozen: H1 = 12/29, A1 = 1/29
        assert!((s1.h[(0, 0)] - 12.0 / 29.0).abs() < 1e-15);
        assert!((s1.a[(0, 0)] - 1.0 / 29.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_second_step() {
        let s1 = sda_step(&scalar_state()).unwrap();
        let s2 = sda_step(&s1).unwrap();
        // frozen: H2 = 12/29 * 986/985 = 11832/28565
        assert!((s2.h[(0, 0)] - 11832.0 / 28565.0).abs() < 1e-15);
    }

    #[test]
    fn zero_gh_squares_a() {
        let s = SdaState::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.25]),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
        );
        let s1 = sda_step(&s).unwrap();
        assert!((&s1.a - &s.a * &s.a).norm() < 1e-15);
        assert_eq!(s1.g.norm(), 0.0);
        assert_eq!(s1.h.norm(), 0.0);
    }

    #[test]
    fn scalar_care_solution() {
        // a=-1, b=c=1: 2aX - X^2 + 1 = 0 has stabilizing root sqrt(2)-1
        let p = CareProblem::from_dense(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            None,
            1.0,
        )
        .unwrap();
        let (x, y, hist) = sda_solve_care(&p, 1e-14, 30).unwrap();
        assert!((x[(0, 0)] - (2.0f64.sqrt() - 1.0)).abs() < 1e-12);
        // the instance is self-dual
        assert!((y[(0, 0)] - (2.0f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(hist.increments.len() <= 7);
    }

    #[test]
    fn zero_c_gives_zero_solution() {
        let p = CareProblem::from_dense(
            DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0])),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 0.0]),
            None,
            0.5,
        )
        .unwrap();
        let (x, _, _) = sda_solve_care(&p, 1e-14, 30).unwrap();
        assert!(x.norm() < 1e-14);
    }

    #[test]
    fn zero_b_reduces_to_lyapunov() {
        // B = 0: A^T X + X A + C^T C = 0, solved independently by the
        // Kronecker-vectorized direct method.
        let a = DMatrix::from_row_slice(3, 3, &[-2.0, 0.3, 0.0, 0.1, -1.0, 0.2, 0.0, -0.1, -1.5]);
        let c = DMatrix::from_row_slice(1, 3, &[1.0, -0.5, 0.25]);
        let p = CareProblem::from_dense(
            a.clone(),
            DMatrix::zeros(3, 1),
            c.clone(),
            None,
            0.5,
        )
        .unwrap();
        let (x, _, _) = sda_solve_care(&p, 1e-15, 40).unwrap();
        let x_lyap = crate::testgen::lyapunov_kron_oracle(&a, &(c.transpose() * &c));
        assert!((x - x_lyap).norm() < 1e-11);
    }

    #[test]
    fn dare_with_zero_a_converges_in_one_step() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g = DMatrix::identity(2, 2);
        let (x, _, hist) =
            sda_solve_dare(&DMatrix::zeros(2, 2), &g, &h, 1e-14, 5).unwrap();
        assert!((x - h).norm() < 1e-14);
        assert_eq!(hist.increments.len(), 1);
    }

    #[test]
    fn scalar_dare_closed_forms() {
        // a=0.5, g=0, h=1: -X + 0.25 X + 1 = 0 => X = 4/3
        let (x, _, _) = sda_solve_dare(
            &DMatrix::from_element(1, 1, 0.5),
            &DMatrix::zeros(1, 1),
            &DMatrix::from_element(1, 1, 1.0),
            1e-15,
            60,
        )
        .unwrap();
        assert!((x[(0, 0)] - 4.0 / 3.0).abs() < 1e-13);
        // g=0 scalar: X = h / (1 - a^2) for |a| < 1
        let (x2, _, _) = sda_solve_dare(
            &DMatrix::from_element(1, 1, 0.3),
            &DMatrix::zeros(1, 1),
            &DMatrix::from_element(1, 1, 2.0),
            1e-15,
            60,
        )
        .unwrap();
        assert!((x2[(0, 0)] - 2.0 / (1.0 - 0.09)).abs() < 1e-13);
    }

    #[test]
    fn h_iterates_are_monotone_and_a_decays_quadratically() {
        let p = crate::testgen::stable_instance(3, 14, 2, 2, 0.2);
        let op = build_shifted_operator(&p, p.n()).unwrap();
        let seed = sda_seed(&p, &op, p.n()).unwrap().dense.unwrap();
        let mut s = SdaState::new(seed.a0, seed.g0, seed.h0);
        let mut prev_h = s.h.clone();
        let mut a_norms = Vec::new();
        for _ in 0..7 {
            s = sda_step(&s).unwrap();
            let diff = &s.h - &prev_h;
            let min_eig = crate::problem::min_symmetric_eigenvalue(&diff);
            assert!(min_eig >= -1e-12 * s.h.norm());
            prev_h = s.h.clone();
            a_norms.push(s.a.norm());
        }
        // log ||A_{k+1}|| <= 2 log ||A_k|| + c for a moderate c until the floor
        for w in a_norms.windows(2) {
            if w[1] > 1e-14 {
                assert!(w[1].ln() <= 2.0 * w[0].ln() + 8.0);
            }
        }
    }
}
