//! Fully dense trace of the truncated doubling iteration.
//!
//! Every intermediate that the large-scale solver eliminates is
//! materialized here at desk scale: the kernel blocks `Y_k^{(j)}` and
//! `T_k^{(j)}`, the per-level factors `N_j = Theta_1^T M_{j-1}`, the direct
//! definitions of the coupling products `L_j`, the dense truncated iterates
//! and the fixed-level sequences `G_k^{(j)}, H_k^{(j)}, A_k^{(j)}`. The
//! coupling recursions go through the solver's own code and the direct
//! evaluations are stored next to them, so identities and error bounds can
//! be checked numerically.

use nalgebra::{DMatrix, DVector};

use crate::config::TruncationSchedule;
use crate::error::{Error, Result};
use crate::kernels;
use crate::problem::{fold_weight, vec_to_diag, CareProblem};
use crate::seed::sda_seed;
use crate::shifted::build_shifted_operator;
use crate::solver::{advance_k, compute_k1, compute_l};

#[derive(Debug, Clone)]
pub struct TraceLevel {
    pub j: usize,
    /// Truncation tolerance applied when forming this level.
    pub eps: f64,
    pub q_u: DMatrix<f64>,
    pub q_v: DMatrix<f64>,
    /// Kept singular values.
    pub sigma1_g: DVector<f64>,
    pub sigma1_h: DVector<f64>,
    /// Full singular value sequences before the split.
    pub sigma_full_g: DVector<f64>,
    pub sigma_full_h: DVector<f64>,
    pub phi1_g: DMatrix<f64>,
    pub phi1_h: DMatrix<f64>,
    /// `N_j = Theta_{1,j}^T M_{j-1}` (kept rows of the kernel factor).
    pub n_g: DMatrix<f64>,
    pub n_h: DMatrix<f64>,
    /// `Y_j^{(j)}` and `T_j^{(j)}`.
    pub y_jj: DMatrix<f64>,
    pub t_jj: DMatrix<f64>,
    /// Dense truncated iterates and the truncated `A_j^{(j)}`.
    pub g_tilde: DMatrix<f64>,
    pub h_tilde: DMatrix<f64>,
    pub a_jj: DMatrix<f64>,
    /// Fixed-level doubling sequences starting at this level:
    /// entry `i` holds `(G_{j+i}^{(j)}, H_{j+i}^{(j)}, A_{j+i}^{(j)})`.
    pub fixed_sequence: Vec<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)>,
    /// Products of the step from this level to the next; `None` on the
    /// final level.
    pub k_g: Option<DMatrix<f64>>,
    pub l_g_direct: Option<DMatrix<f64>>,
    pub l_h_direct: Option<DMatrix<f64>>,
    pub l_g_recursive: Option<DMatrix<f64>>,
    pub l_h_recursive: Option<DMatrix<f64>>,
    /// `A_{j+1}^{(j)}`: one doubling with this level's coefficients,
    /// before the next truncation.
    pub a_next_untruncated: Option<DMatrix<f64>>,
    /// Factors of the step's small SVD of `S_G Omega S_H`.
    pub step_uy: Option<DMatrix<f64>>,
    pub sigma_y_next: Option<DVector<f64>>,
    pub step_vy: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct DenseTrace {
    pub gamma: f64,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    /// Dense Cayley operator.
    pub a_tilde: DMatrix<f64>,
    /// Seed kernel `Y_1` and its singular values.
    pub y1: DMatrix<f64>,
    pub sigma_y1: DVector<f64>,
    /// Untruncated first iterates.
    pub g1: DMatrix<f64>,
    pub h1: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub levels: Vec<TraceLevel>,
}

impl DenseTrace {
    pub fn level(&self, j: usize) -> Result<&TraceLevel> {
        self.levels.get(j.wrapping_sub(1)).ok_or(Error::TraceMissing)
    }
}

struct LevelState {
    q_u: DMatrix<f64>,
    q_v: DMatrix<f64>,
    sigma1_g: DVector<f64>,
    sigma1_h: DVector<f64>,
    phi1_g: DMatrix<f64>,
    phi1_h: DMatrix<f64>,
    n_g: DMatrix<f64>,
    n_h: DMatrix<f64>,
    y_jj: DMatrix<f64>,
    sigma_full_g: DVector<f64>,
    sigma_full_h: DVector<f64>,
}

/// Runs the truncated iteration densely up to level `k_max`, following each
/// level's fixed coefficients up to `k_follow` total doublings.
pub fn dense_dsda_t_trace(
    p: &CareProblem,
    eps: &TruncationSchedule,
    k_max: usize,
    k_follow: usize,
) -> Result<DenseTrace> {
    assert!(k_max >= 1);
    let p = fold_weight(p)?;
    let n = p.n();
    let m = p.m();
    let l = p.l();
    let gamma = p.gamma;
    let two_gamma = 2.0 * gamma;
    let op = build_shifted_operator(&p, n)?;
    let seed = sda_seed(&p, &op, 0)?;
    let a_tilde = op.a_tilde_dense_power(1);

    // Untruncated level-1 quantities.
    let u1 = op.apply_a_tilde(&seed.u0, false);
    let v1 = op.apply_a_tilde(&seed.v0, true);
    let ubreve = hstack(&[seed.u0.clone(), u1]);
    let vbreve = hstack(&[seed.v0.clone(), v1]);
    let mut y1 = DMatrix::zeros(2 * m, 2 * l);
    y1.view_mut((0, l), (m, l)).copy_from(&seed.y0);
    y1.view_mut((m, 0), (m, l)).copy_from(&seed.y0);
    y1.view_mut((m, l), (m, l))
        .copy_from(&(&seed.t0 * two_gamma));
    let e_y1 = spd_inverse(&(DMatrix::identity(2 * m, 2 * m) + &y1 * y1.transpose()))?;
    let f_y1 = spd_inverse(&(DMatrix::identity(2 * l, 2 * l) + y1.transpose() * &y1))?;
    let g1 = &ubreve * &e_y1 * ubreve.transpose() * two_gamma;
    let h1 = &vbreve * &f_y1 * vbreve.transpose() * two_gamma;
    let a1 = &a_tilde * &a_tilde - &ubreve * &e_y1 * &y1 * vbreve.transpose() * two_gamma;

    // Level-1 truncation.
    let qr_u = kernels::qr_col_pivot(&ubreve, kernels::DEFAULT_QR_RANK_U);
    let qr_v = kernels::qr_col_pivot(&vbreve, kernels::DEFAULT_QR_RANK_U);
    if qr_u.rank() == 0 || qr_v.rank() == 0 {
        return Err(Error::DegenerateProblem("zero seed factor"));
    }
    let y_svd = kernels::svd(&y1, false)?;
    let ups_g = DVector::from_fn(2 * m, |i, _| {
        1.0 + y_svd.s.get(i).copied().unwrap_or(0.0).powi(2)
    });
    let ups_h = DVector::from_fn(2 * l, |i, _| {
        1.0 + y_svd.s.get(i).copied().unwrap_or(0.0).powi(2)
    });
    let su = qr_u.r_unpermuted();
    let sv = qr_v.r_unpermuted();
    let gm_in = scale_cols(&(&su * &y_svd.u), &ups_g.map(|x| x.powf(-0.5)));
    let hm_in = scale_cols(&(&sv * &y_svd.v), &ups_h.map(|x| x.powf(-0.5)));

    let eps1 = eps.eps_for(1);
    let (theta1_g, sigma1_g, phi1_g, sigma_full_g) = split_svd(&gm_in, eps1)?;
    let (theta1_h, sigma1_h, phi1_h, sigma_full_h) = split_svd(&hm_in, eps1)?;

    let mut state = LevelState {
        q_u: &qr_u.q * &theta1_g,
        q_v: &qr_v.q * &theta1_h,
        n_g: theta1_g.transpose() * &su,
        n_h: theta1_h.transpose() * &sv,
        sigma1_g,
        sigma1_h,
        phi1_g,
        phi1_h,
        y_jj: y1.clone(),
        sigma_full_g,
        sigma_full_h,
    };

    let mut levels: Vec<TraceLevel> = Vec::new();
    for j in 1..=k_max {
        let level = build_level(&state, &a_tilde, gamma, eps.eps_for(j), j, k_follow)?;
        levels.push(level);
        if j == k_max {
            break;
        }
        state = advance_level(&mut levels, &state, &a_tilde, gamma, eps.eps_for(j + 1), j, &y_svd.s)?;
    }

    Ok(DenseTrace {
        gamma,
        n,
        m,
        l,
        a_tilde,
        y1,
        sigma_y1: y_svd.s,
        g1,
        h1,
        a1,
        levels,
    })
}

fn build_level(
    st: &LevelState,
    a_tilde: &DMatrix<f64>,
    gamma: f64,
    eps: f64,
    j: usize,
    k_follow: usize,
) -> Result<TraceLevel> {
    let two_gamma = 2.0 * gamma;
    let mm = st.y_jj.nrows();
    let e_y = spd_inverse(&(DMatrix::identity(mm, mm) + &st.y_jj * st.y_jj.transpose()))?;

    let omega = st.q_u.transpose() * &st.q_v;
    let t_jj = st.n_g.transpose() * &omega * &st.n_h;

    let g_tilde = scale_qdq(&st.q_u, &st.sigma1_g, two_gamma);
    let h_tilde = scale_qdq(&st.q_v, &st.sigma1_h, two_gamma);
    let qu_ng = &st.q_u * &st.n_g;
    let qv_nh = &st.q_v * &st.n_h;
    let a_jj =
        matrix_power_pow2(a_tilde, j) - &qu_ng * &e_y * &st.y_jj * qv_nh.transpose() * two_gamma;

    // Fixed-level doubling sequence with frozen coefficients.
    let mut fixed = Vec::new();
    {
        let step_pow = matrix_power_pow2(a_tilde, j);
        let step_pow_t = step_pow.transpose();
        let mut x_u_blocks = vec![st.q_u.clone()];
        let mut x_v_blocks = vec![st.q_v.clone()];
        let mut y_k = st.y_jj.clone();
        for k in j..=k_follow {
            let t = 1usize << (k - j);
            while x_u_blocks.len() < t {
                let nu = &step_pow * x_u_blocks.last().unwrap();
                x_u_blocks.push(nu);
                let nv = &step_pow_t * x_v_blocks.last().unwrap();
                x_v_blocks.push(nv);
            }
            let x_u = hstack(&x_u_blocks[..t]);
            let x_v = hstack(&x_v_blocks[..t]);
            let ng_big = kron_eye(t, &st.n_g);
            let nh_big = kron_eye(t, &st.n_h);
            let de = y_k.nrows();
            let df = y_k.ncols();
            let e_yk = spd_inverse(&(DMatrix::identity(de, de) + &y_k * y_k.transpose()))?;
            let f_yk = spd_inverse(&(DMatrix::identity(df, df) + y_k.transpose() * &y_k))?;
            let xu_ng = &x_u * &ng_big;
            let xv_nh = &x_v * &nh_big;
            let g_k = &xu_ng * &e_yk * xu_ng.transpose() * two_gamma;
            let h_k = &xv_nh * &f_yk * xv_nh.transpose() * two_gamma;
            let a_k =
                matrix_power_pow2(a_tilde, k) - &xu_ng * &e_yk * &y_k * xv_nh.transpose() * two_gamma;
            fixed.push((g_k, h_k, a_k));
            if k < k_follow {
                let t_k = ng_big.transpose() * (x_u.transpose() * &x_v) * &nh_big;
                y_k = embed_y(&y_k, &t_k, two_gamma);
            }
        }
    }

    Ok(TraceLevel {
        j,
        eps,
        q_u: st.q_u.clone(),
        q_v: st.q_v.clone(),
        sigma1_g: st.sigma1_g.clone(),
        sigma1_h: st.sigma1_h.clone(),
        sigma_full_g: st.sigma_full_g.clone(),
        sigma_full_h: st.sigma_full_h.clone(),
        phi1_g: st.phi1_g.clone(),
        phi1_h: st.phi1_h.clone(),
        n_g: st.n_g.clone(),
        n_h: st.n_h.clone(),
        y_jj: st.y_jj.clone(),
        t_jj,
        g_tilde,
        h_tilde,
        a_jj,
        fixed_sequence: fixed,
        k_g: None,
        l_g_direct: None,
        l_h_direct: None,
        l_g_recursive: None,
        l_h_recursive: None,
        a_next_untruncated: None,
        step_uy: None,
        sigma_y_next: None,
        step_vy: None,
    })
}

/// Advances the dense state one truncated doubling step, filling in the
/// step products of the just-completed level.
fn advance_level(
    levels: &mut [TraceLevel],
    st: &LevelState,
    a_tilde: &DMatrix<f64>,
    gamma: f64,
    eps_next: f64,
    j: usize,
    sigma_y1: &DVector<f64>,
) -> Result<LevelState> {
    let two_gamma = 2.0 * gamma;
    let rg = st.sigma1_g.len();
    let rh = st.sigma1_h.len();
    let mm = st.y_jj.nrows();
    let ll = st.y_jj.ncols();

    let pow = matrix_power_pow2(a_tilde, j);
    let w_u = &pow * &st.q_u;
    let w_v = pow.transpose() * &st.q_v;
    let ext_u = kernels::extend_basis(&st.q_u, &w_u);
    let ext_v = kernels::extend_basis(&st.q_v, &w_v);

    let omega = st.q_u.transpose() * &st.q_v;
    let core =
        DMatrix::from_diagonal(&st.sigma1_g) * &omega * DMatrix::from_diagonal(&st.sigma1_h);
    let core_svd = kernels::svd(&core, false)?;
    let (uy, sy, vy) = (core_svd.u, core_svd.s, core_svd.v);

    // Coupling kernel through the solver's own recursion.
    let k_g = if j == 1 {
        compute_k1(&st.phi1_g, sigma_y1, mm, ll, &st.phi1_h)?
    } else {
        let before = &levels[j - 2];
        let k_prev = before.k_g.clone().ok_or(Error::TraceMissing)?;
        let uy_prev = before.step_uy.clone().ok_or(Error::TraceMissing)?;
        let sy_prev = before.sigma_y_next.clone().ok_or(Error::TraceMissing)?;
        let vy_prev = before.step_vy.clone().ok_or(Error::TraceMissing)?;
        advance_k(&k_prev, &uy_prev, &sy_prev, &vy_prev, &st.phi1_g, &st.phi1_h, gamma)?
    };

    // Direct definitions of the coupling products.
    let e_y = spd_inverse(&(DMatrix::identity(mm, mm) + &st.y_jj * st.y_jj.transpose()))?;
    let f_y = spd_inverse(&(DMatrix::identity(ll, ll) + st.y_jj.transpose() * &st.y_jj))?;
    let l_g_direct =
        &st.n_g * &e_y * &st.y_jj * st.n_h.transpose() * omega.transpose() * two_gamma;
    let l_h_direct =
        &st.n_h * &f_y * st.y_jj.transpose() * st.n_g.transpose() * &omega * two_gamma;
    let (l_g_rec, l_h_rec) = compute_l(&st.sigma1_g, &st.sigma1_h, &k_g, &omega, gamma)?;

    // One doubling with frozen coefficients, before the next truncation.
    let t_jj = st.n_g.transpose() * &omega * &st.n_h;
    let y_next = embed_y(&st.y_jj, &t_jj, two_gamma);
    let x_u = hstack(&[st.q_u.clone(), w_u.clone()]);
    let x_v = hstack(&[st.q_v.clone(), w_v.clone()]);
    let ng2 = kron_eye(2, &st.n_g);
    let nh2 = kron_eye(2, &st.n_h);
    let e_big =
        spd_inverse(&(DMatrix::identity(2 * mm, 2 * mm) + &y_next * y_next.transpose()))?;
    let a_next_untrunc = matrix_power_pow2(a_tilde, j + 1)
        - (&x_u * &ng2) * &e_big * &y_next * (&x_v * &nh2).transpose() * two_gamma;

    // Eliminated-form block SVDs, identical to the solver step.
    let ups_g = DVector::from_fn(rg, |i, _| {
        1.0 + 4.0 * gamma * gamma * sy.get(i).copied().unwrap_or(0.0).powi(2)
    });
    let ups_h = DVector::from_fn(rh, |i, _| {
        1.0 + 4.0 * gamma * gamma * sy.get(i).copied().unwrap_or(0.0).powi(2)
    });
    let inv_sqrt_g = ups_g.map(|x| x.powf(-0.5));
    let inv_sqrt_h = ups_h.map(|x| x.powf(-0.5));
    let sy_mat = vec_to_diag(&sy, rg, rh);
    let sg = DMatrix::from_diagonal(&st.sigma1_g);
    let sh = DMatrix::from_diagonal(&st.sigma1_h);

    let bg = {
        let tr = scale_cols(&(&sg * &k_g * &vy * sy_mat.transpose()), &inv_sqrt_g) * (-two_gamma);
        let br = scale_cols(&(&sg * &uy), &inv_sqrt_g);
        let mut out = DMatrix::zeros(2 * rg, 2 * rg);
        out.view_mut((0, 0), (rg, rg)).copy_from(&sg);
        out.view_mut((0, rg), (rg, rg)).copy_from(&tr);
        out.view_mut((rg, rg), (rg, rg)).copy_from(&br);
        out
    };
    let bh = {
        let tr = scale_cols(&(&sh * k_g.transpose() * &uy * &sy_mat), &inv_sqrt_h) * (-two_gamma);
        let br = scale_cols(&(&sh * &vy), &inv_sqrt_h);
        let mut out = DMatrix::zeros(2 * rh, 2 * rh);
        out.view_mut((0, 0), (rh, rh)).copy_from(&sh);
        out.view_mut((0, rh), (rh, rh)).copy_from(&tr);
        out.view_mut((rh, rh), (rh, rh)).copy_from(&br);
        out
    };
    let lmat_u = stack_ext(rg, &ext_u.r12, &ext_u.r2);
    let lmat_v = stack_ext(rh, &ext_v.r12, &ext_v.r2);
    let g_in = &lmat_u * &bg;
    let h_in = &lmat_v * &bh;

    let (theta1_g, sigma1_g, phi1_g, sigma_full_g) = split_svd(&g_in, eps_next)?;
    let (theta1_h, sigma1_h, phi1_h, sigma_full_h) = split_svd(&h_in, eps_next)?;

    let qhat_u = hstack(&[st.q_u.clone(), ext_u.q_new.clone()]);
    let qhat_v = hstack(&[st.q_v.clone(), ext_v.q_new.clone()]);

    // M_j = [[I, R12],[0, R2]] (I_2 x N_j); next level N = Theta_1^T M_j.
    let m_g = &lmat_u * kron_eye(2, &st.n_g);
    let m_h = &lmat_v * kron_eye(2, &st.n_h);

    let next = LevelState {
        q_u: &qhat_u * &theta1_g,
        q_v: &qhat_v * &theta1_h,
        n_g: theta1_g.transpose() * &m_g,
        n_h: theta1_h.transpose() * &m_h,
        sigma1_g,
        sigma1_h,
        phi1_g,
        phi1_h,
        y_jj: y_next,
        sigma_full_g,
        sigma_full_h,
    };

    let lvl = &mut levels[j - 1];
    lvl.k_g = Some(k_g);
    lvl.l_g_direct = Some(l_g_direct);
    lvl.l_h_direct = Some(l_h_direct);
    lvl.l_g_recursive = Some(l_g_rec);
    lvl.l_h_recursive = Some(l_h_rec);
    lvl.a_next_untruncated = Some(a_next_untrunc);
    lvl.step_uy = Some(uy);
    lvl.sigma_y_next = Some(sy);
    lvl.step_vy = Some(vy);

    Ok(next)
}

fn split_svd(
    m_in: &DMatrix<f64>,
    eps: f64,
) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>)> {
    let f = kernels::svd(m_in, true)?;
    if f.s.len() == 0 || f.s[0] <= 0.0 {
        return Err(Error::KernelDegenerate);
    }
    let split = kernels::truncation_split(&f.s, eps);
    let r = split.r;
    Ok((
        f.u.columns(0, r).into_owned(),
        DVector::from_fn(r, |i, _| f.s[i]),
        f.v.columns(0, r).into_owned(),
        f.s.clone(),
    ))
}

fn embed_y(y: &DMatrix<f64>, t: &DMatrix<f64>, two_gamma: f64) -> DMatrix<f64> {
    let (a, b) = (y.nrows(), y.ncols());
    let mut out = DMatrix::zeros(2 * a, 2 * b);
    out.view_mut((0, b), (a, b)).copy_from(y);
    out.view_mut((a, 0), (a, b)).copy_from(y);
    out.view_mut((a, b), (a, b)).copy_from(&(t * two_gamma));
    out
}

fn hstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

fn kron_eye(t: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(t * m.nrows(), t * m.ncols());
    for i in 0..t {
        out.view_mut((i * m.nrows(), i * m.ncols()), (m.nrows(), m.ncols()))
            .copy_from(m);
    }
    out
}

fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    m.clone()
        .cholesky()
        .map(|c| c.solve(&DMatrix::identity(n, n)))
        .ok_or(Error::NearSingularPencil { cond: f64::INFINITY })
}

fn matrix_power_pow2(m: &DMatrix<f64>, log2_e: usize) -> DMatrix<f64> {
    let mut out = m.clone();
    for _ in 0..log2_e {
        out = &out * &out;
    }
    out
}

fn scale_cols(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for j in 0..out.ncols() {
        out.column_mut(j).scale_mut(w[j]);
    }
    out
}

fn scale_qdq(q: &DMatrix<f64>, s: &DVector<f64>, scale: f64) -> DMatrix<f64> {
    let weighted = scale_cols(q, &s.map(|x| scale * x * x));
    &weighted * q.transpose()
}

fn stack_ext(r: usize, r12: &DMatrix<f64>, r2: &DMatrix<f64>) -> DMatrix<f64> {
    let extra = r2.nrows();
    let s = r12.ncols();
    let mut out = DMatrix::zeros(r + extra, r + s);
    for i in 0..r {
        out[(i, i)] = 1.0;
    }
    out.view_mut((0, r), (r, s)).copy_from(r12);
    out.view_mut((r, r), (extra, s)).copy_from(r2);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{dsda_evaluate, dsda_kernel_seed, dsda_kernel_step};

    #[test]
    fn untruncated_trace_matches_decoupled_iterates() {
        // eps = 0 keeps every direction: the trace reproduces the
        // untruncated doubling exactly.
        let p = crate::testgen::stable_instance(31, 20, 2, 2, 0.25);
        let trace =
            dense_dsda_t_trace(&p, &TruncationSchedule::Constant(0.0), 4, 4).unwrap();
        let folded = fold_weight(&p).unwrap();
        let op = build_shifted_operator(&folded, folded.n()).unwrap();
        let seed = sda_seed(&folded, &op, folded.n()).unwrap();
        let mut kernel = dsda_kernel_seed(&seed, p.gamma, None);
        for j in 1..=4 {
            kernel = dsda_kernel_step(&kernel, &op).unwrap();
            let (h, g, a) = dsda_evaluate(&kernel, &op);
            let lvl = trace.level(j).unwrap();
            assert!(
                (&lvl.g_tilde - &g).norm() <= 1e-12 * g.norm().max(1.0),
                "G mismatch at level {j}"
            );
            assert!(
                (&lvl.h_tilde - &h).norm() <= 1e-12 * h.norm().max(1.0),
                "H mismatch at level {j}"
            );
            assert!(
                (&lvl.a_jj - &a).norm() <= 1e-11 * a.norm().max(1.0),
                "A mismatch at level {j}: {}",
                (&lvl.a_jj - &a).norm()
            );
        }
    }

    #[test]
    fn sigma_identity_holds_per_level() {
        // N_j E(Y_j^{(j)}) N_j^T = Sigma_{1,j}^2 on both sides.
        let p = crate::testgen::stable_instance(57, 20, 3, 2, 0.25);
        let trace =
            dense_dsda_t_trace(&p, &TruncationSchedule::Constant(1e-10), 4, 4).unwrap();
        for lvl in &trace.levels {
            let mm = lvl.y_jj.nrows();
            let ll = lvl.y_jj.ncols();
            let e_y =
                spd_inverse(&(DMatrix::identity(mm, mm) + &lvl.y_jj * lvl.y_jj.transpose()))
                    .unwrap();
            let f_y =
                spd_inverse(&(DMatrix::identity(ll, ll) + lvl.y_jj.transpose() * &lvl.y_jj))
                    .unwrap();
            let lhs_g = &lvl.n_g * &e_y * lvl.n_g.transpose();
            let sig2_g = DMatrix::from_diagonal(&lvl.sigma1_g.map(|x| x * x));
            assert!(
                (&lhs_g - &sig2_g).norm() <= 1e-10 * sig2_g.norm(),
                "G-side kernel identity failed at level {}: {:e}",
                lvl.j,
                (&lhs_g - &sig2_g).norm()
            );
            let lhs_h = &lvl.n_h * &f_y * lvl.n_h.transpose();
            let sig2_h = DMatrix::from_diagonal(&lvl.sigma1_h.map(|x| x * x));
            assert!(
                (&lhs_h - &sig2_h).norm() <= 1e-10 * sig2_h.norm(),
                "H-side kernel identity failed at level {}",
                lvl.j
            );
        }
    }

    #[test]
    fn coupling_recursion_matches_direct_definition() {
        let p = crate::testgen::stable_instance(91, 20, 2, 2, 0.25);
        let trace =
            dense_dsda_t_trace(&p, &TruncationSchedule::Constant(1e-12), 4, 4).unwrap();
        for lvl in &trace.levels {
            if let (Some(dir), Some(rec)) = (&lvl.l_g_direct, &lvl.l_g_recursive) {
                assert!(
                    (dir - rec).norm() <= 1e-10 * dir.norm().max(1e-12),
                    "L_G recursion mismatch at level {}: {:e} vs norm {:e}",
                    lvl.j,
                    (dir - rec).norm(),
                    dir.norm()
                );
            }
            if let (Some(dir), Some(rec)) = (&lvl.l_h_direct, &lvl.l_h_recursive) {
                assert!(
                    (dir - rec).norm() <= 1e-10 * dir.norm().max(1e-12),
                    "L_H recursion mismatch at level {}",
                    lvl.j
                );
            }
        }
    }

    #[test]
    fn scalar_chain_levels_match_coupled_recursion() {
        let p = CareProblem::from_dense(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            None,
            1.0,
        )
        .unwrap();
        let trace =
            dense_dsda_t_trace(&p, &TruncationSchedule::Constant(1e-15), 3, 3).unwrap();
        assert!((trace.level(1).unwrap().h_tilde[(0, 0)] - 12.0 / 29.0).abs() < 1e-13);
        assert!(
            (trace.level(2).unwrap().h_tilde[(0, 0)] - 11832.0 / 28565.0).abs() < 1e-13
        );
    }

    #[test]
    fn truncation_perturbation_is_within_eps() {
        // ||H_{j+1}^{(j+1)} - H_{j+1}^{(j)}|| <= eps ||H_{j+1}^{(j)}|| + slack
        let p = crate::testgen::stable_instance(13, 18, 2, 2, 0.25);
        let eps = 1e-6;
        let trace =
            dense_dsda_t_trace(&p, &TruncationSchedule::Constant(eps), 4, 4).unwrap();
        for j in 1..4 {
            let lvl = trace.level(j).unwrap();
            let next = trace.level(j + 1).unwrap();
            // H_{j+1}^{(j)} is the second element of this level's fixed
            // sequence.
            let h_advanced = &lvl.fixed_sequence[1].1;
            let diff = (&next.h_tilde - h_advanced).norm();
            assert!(
                diff <= eps * h_advanced.norm() + 1e-12,
                "truncation perturbation too large at level {j}: {diff:e}"
            );
        }
    }
}
