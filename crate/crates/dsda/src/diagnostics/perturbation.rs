//! Discrete-equation fixed point and perturbation theory: the operator
//! quantities `ell`, `xi`, `eta`, the rigorous perturbation bound `theta`
//! and its first-order simplification.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{min_symmetric_eigenvalue, spectral_norm};

/// Operator-norm scalars of the linearized discrete equation at `X`.
#[derive(Debug, Clone)]
pub struct PerturbationQuantities {
    /// `||L^-1||^-1` with `L(P) = P - A_c^T P A_c` on symmetric matrices.
    pub ell: f64,
    pub xi: f64,
    pub eta: f64,
    /// Closed-loop matrix `(I + G X)^-1 A`.
    pub a_c: DMatrix<f64>,
}

/// Norms of the coefficient perturbations.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationDeltas {
    pub da: f64,
    pub dg: f64,
    pub dh: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbationBound {
    pub delta: f64,
    pub alpha: f64,
    pub g: f64,
    pub omega: f64,
    pub zeta: f64,
    /// Error bound; present only when every hypothesis holds.
    pub theta: Option<f64>,
    /// Each hypothesis, in order: perturbed G psd, perturbed H psd,
    /// `||X(I+GX)^-1|| ||dG|| < 1`, `g theta < 1`, the subspace inequality,
    /// the omega inequality, nonnegative discriminant.
    pub conditions: [bool; 7],
}

impl PerturbationBound {
    pub fn conditions_met(&self) -> bool {
        self.conditions.iter().all(|&c| c)
    }

    pub fn theta_checked(&self) -> Result<f64> {
        match self.theta {
            Some(t) if self.conditions_met() => Ok(t),
            _ => {
                let names = [
                    "perturbed G psd",
                    "perturbed H psd",
                    "contraction",
                    "g*theta < 1",
                    "subspace inequality",
                    "omega inequality",
                    "nonnegative discriminant",
                ];
                let failed: Vec<&str> = self
                    .conditions
                    .iter()
                    .zip(names.iter())
                    .filter(|(ok, _)| !**ok)
                    .map(|(_, n)| *n)
                    .collect();
                Err(Error::ConditionsViolated(failed.join(", ")))
            }
        }
    }
}

/// Relative defect of the fixed-point identity
/// `A_k^T X (I + G_k X)^-1 A_k + H_k = X` satisfied by every doubling
/// iterate at the exact solution.
pub fn dare_fixed_point_defect(
    ak: &DMatrix<f64>,
    gk: &DMatrix<f64>,
    hk: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<f64> {
    let n = x.nrows();
    let w = DMatrix::identity(n, n) + gk * x;
    let lu = w.lu();
    let winv_a = lu.solve(ak).ok_or(Error::SingularMatrix)?;
    if !winv_a.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularMatrix);
    }
    let fixed = ak.transpose() * x * winv_a + hk;
    let num = (&fixed - x).norm();
    let den = x.norm();
    Ok(if den > 0.0 { num / den } else { num })
}

/// Orthonormal basis of the symmetric matrices under the Frobenius inner
/// product: `E_ii`, then `(E_ij + E_ji)/sqrt(2)` for `i < j`.
fn sym_basis_coords(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let s = n * (n + 1) / 2;
    let mut out = DVector::zeros(s);
    let mut k = 0;
    for i in 0..n {
        out[k] = m[(i, i)];
        k += 1;
    }
    let sqrt2 = 2.0f64.sqrt();
    for i in 0..n {
        for j in (i + 1)..n {
            out[k] = sqrt2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            k += 1;
        }
    }
    out
}

fn sym_basis_element(n: usize, k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    if k < n {
        m[(k, k)] = 1.0;
        return m;
    }
    let mut idx = n;
    let inv_sqrt2 = 0.5f64.sqrt();
    for i in 0..n {
        for j in (i + 1)..n {
            if idx == k {
                m[(i, j)] = inv_sqrt2;
                m[(j, i)] = inv_sqrt2;
                return m;
            }
            idx += 1;
        }
    }
    unreachable!("basis index out of range")
}

/// Builds `ell`, `xi`, `eta` at a solution `X` of the discrete equation
/// with coefficients `(A, G, H)`. Vectorizes the three operators (the first
/// restricted to the symmetric subspace) and takes extreme singular values.
/// Intended for `n <= 40`.
pub fn perturbation_quantities(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    _h: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<PerturbationQuantities> {
    let n = a.nrows();
    let w = DMatrix::identity(n, n) + g * x;
    let w_lu = w.lu();
    let a_c = w_lu.solve(a).ok_or(Error::SingularMatrix)?;
    for e in a_c.complex_eigenvalues().iter() {
        if e.norm() >= 1.0 {
            return Err(Error::UnstableClosedLoop);
        }
    }

    let s = n * (n + 1) / 2;
    // L restricted to the symmetric subspace.
    let mut l_mat = DMatrix::zeros(s, s);
    for k in 0..s {
        let bk = sym_basis_element(n, k);
        let img = &bk - a_c.transpose() * &bk * &a_c;
        l_mat.set_column(k, &sym_basis_coords(&img));
    }
    let l_svd = l_mat.clone().svd(false, false);
    let ell = l_svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    let l_lu = l_mat.lu();
    // P = A^T (I + X G)^-1 X; (I + X G)^-1 X = ((I + G X)^-1)^T X^T = W^-T X
    let p_mat = {
        let wt_lu = (DMatrix::identity(n, n) + x * g).lu();
        let inner = wt_lu.solve(x).ok_or(Error::SingularMatrix)?;
        a.transpose() * inner
    };

    // xi: general Phi -> L^-1 [P Phi + (P Phi)^T]
    let mut xi_mat = DMatrix::zeros(s, n * n);
    for col in 0..n * n {
        let (i, j) = (col % n, col / n);
        let mut phi = DMatrix::zeros(n, n);
        phi[(i, j)] = 1.0;
        let img = &p_mat * &phi;
        let sym = &img + img.transpose();
        let coords = sym_basis_coords(&sym);
        let solved = l_lu.solve(&coords).ok_or(Error::SingularMatrix)?;
        xi_mat.set_column(col, &solved);
    }
    let xi = spectral_norm(&xi_mat);

    // eta: symmetric Phi -> L^-1 [P Phi P^T]
    let mut eta_mat = DMatrix::zeros(s, s);
    for k in 0..s {
        let bk = sym_basis_element(n, k);
        let img = &p_mat * &bk * p_mat.transpose();
        let coords = sym_basis_coords(&img);
        let solved = l_lu.solve(&coords).ok_or(Error::SingularMatrix)?;
        eta_mat.set_column(k, &solved);
    }
    let eta = spectral_norm(&eta_mat);

    Ok(PerturbationQuantities { ell, xi, eta, a_c })
}

/// Rigorous error bound for the perturbed discrete equation. All norms are
/// spectral. `base = (A, G, H, X)`, `deltas = (dA, dG, dH)` as matrices.
pub fn perturbation_bound(
    q: &PerturbationQuantities,
    base: (&DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>),
    deltas: (&DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>),
) -> Result<PerturbationBound> {
    let (a, g_mat, h_mat, x) = base;
    let (da_mat, dg_mat, dh_mat) = deltas;
    let n = a.nrows();

    let w_lu = (DMatrix::identity(n, n) + g_mat * x).lu();
    let w_inv = w_lu
        .solve(&DMatrix::identity(n, n))
        .ok_or(Error::SingularMatrix)?;
    let xw = x * &w_inv; // X (I+GX)^-1
    let wa = &w_inv * a; // (I+GX)^-1 A
    let xwa = x * &wa; // X (I+GX)^-1 A

    let nda = spectral_norm(da_mat);
    let ndg = spectral_norm(dg_mat);
    let ndh = spectral_norm(dh_mat);
    let n_xw = spectral_norm(&xw);
    let n_winv = spectral_norm(&w_inv);
    let n_wa = spectral_norm(&wa);
    let n_xwa = spectral_norm(&xwa);
    let n_a = spectral_norm(a);
    let n_g = spectral_norm(g_mat);

    let contraction = n_xw * ndg < 1.0;
    let denom_c = 1.0 - n_xw * ndg;

    let delta = (nda + n_xwa * ndg) / denom_c;
    let alpha = n_winv * (n_a + nda) / denom_c;
    let g = n_winv * (n_g + ndg) / denom_c;

    let ell = q.ell;
    let omega = ndh / ell
        + q.xi * nda
        + q.eta * ndg
        + delta * n_xw / ell * (nda + n_xwa * ndg);
    let zeta = delta * n_winv * (2.0 * n_wa + delta * n_winv);

    let disc = (ell - zeta + ell * g * omega).powi(2) - 4.0 * ell * g * omega * (ell - zeta + alpha * alpha);
    let discriminant_ok = disc >= 0.0;
    let theta_val = if discriminant_ok {
        let denom = ell - zeta + ell * g * omega + disc.sqrt();
        if denom > 0.0 {
            Some(2.0 * ell * omega / denom)
        } else {
            None
        }
    } else {
        None
    };

    let g_perturbed = g_mat + dg_mat;
    let h_perturbed = h_mat + dh_mat;
    let g_psd =
        min_symmetric_eigenvalue(&g_perturbed) >= -1e-12 * spectral_norm(&g_perturbed).max(1.0);
    let h_psd =
        min_symmetric_eigenvalue(&h_perturbed) >= -1e-12 * spectral_norm(&h_perturbed).max(1.0);

    let g_theta_ok = match theta_val {
        Some(t) => g * t < 1.0,
        None => false,
    };
    let subspace_ok = match theta_val {
        Some(t) if g * t < 1.0 => {
            let lhs = (delta * n_winv + g * t * n_wa) / (1.0 - g * t);
            let rhs = ell / (n_wa + (ell + n_wa * n_wa).sqrt());
            lhs < rhs
        }
        _ => false,
    };
    let omega_ok = if g == 0.0 {
        true
    } else {
        let root = ((ell - zeta + 2.0 * alpha).powi(2) - (ell - zeta).powi(2)).max(0.0).sqrt();
        let rhs = (ell - zeta).powi(2) / (ell * g * (ell - zeta + 2.0 * alpha + root));
        omega < rhs
    };

    let conditions = [
        g_psd,
        h_psd,
        contraction,
        g_theta_ok,
        subspace_ok,
        omega_ok,
        discriminant_ok,
    ];
    let all = conditions.iter().all(|&c| c);
    Ok(PerturbationBound {
        delta,
        alpha,
        g,
        omega,
        zeta,
        theta: if all { theta_val } else { None },
        conditions,
    })
}

/// First-order perturbation bound `(1/ell) ||dH|| + xi ||dA|| + eta ||dG||`.
pub fn first_order_bound(q: &PerturbationQuantities, d: PerturbationDeltas) -> f64 {
    d.dh / q.ell + q.xi * d.da + q.eta * d.dg
}
