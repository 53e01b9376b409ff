//! The large-scale truncated doubling solver.
//!
//! Per step the state is two orthonormal bases with their kept singular
//! values and right factors, plus a small coupling kernel. The doubled
//! iterate is never materialized: the kernel recursion produces the next
//! truncated level directly from the current one, so the only `n`-sized
//! work per step is propagating the bases through the shifted solves and
//! one block re-orthogonalization.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::config::SolverConfig;
use crate::diagnostics::{residual_dual_lowrank, residual_lowrank};
use crate::error::{Error, Result};
use crate::kernels;
use crate::lowrank::LowRankGram;
use crate::problem::{fold_weight, validate_problem, CareProblem};
use crate::seed::{sda_seed, SdaSeed};
use crate::shifted::{build_shifted_operator, ShiftedOperator};

/// Per-side truncation carry-over at level `j`: the orthonormal basis, the
/// kept singular values and the kept right factor of the level's SVD.
#[derive(Debug, Clone)]
pub struct SideState {
    /// `n x r` orthonormal basis.
    pub q: DMatrix<f64>,
    /// Kept singular values, strictly positive, nonincreasing.
    pub sigma1: DVector<f64>,
    /// Kept right factor (`2 r_prev x r`; `2m` or `2l` rows at level 1).
    pub phi1: DMatrix<f64>,
}

impl SideState {
    pub fn rank(&self) -> usize {
        self.sigma1.len()
    }
}

/// What the next step needs to rebuild its coupling kernel.
#[derive(Debug, Clone)]
pub enum KernelCarry {
    /// After level 1: the singular values of the seed kernel `Y_1`
    /// (a `2m x 2l` rectangular diagonal).
    Seed {
        sigma_y: DVector<f64>,
        rows: usize,
        cols: usize,
    },
    /// After level `j >= 2`: the coupling kernel `K_{j-1}` and the factors
    /// of the previous step's small SVD.
    Advanced {
        k: DMatrix<f64>,
        uy: DMatrix<f64>,
        sy: DVector<f64>,
        vy: DMatrix<f64>,
    },
}

/// Cross-side state saved between steps.
#[derive(Debug, Clone)]
pub struct CouplingState {
    /// Current level.
    pub j: usize,
    pub gamma: f64,
    pub carry: KernelCarry,
}

/// Why the iteration stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    Diverged,
    NearSingularPencil,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub j: usize,
    pub rho_x: f64,
    pub rho_y: Option<f64>,
    /// Rank of the primal iterate (the `H`-side).
    pub rank_x: usize,
    /// Rank of the dual iterate (the `G`-side).
    pub rank_y: usize,
    /// `||H_j - H_{j-1}||_F / ||H_j||_F`; absent at level 1.
    pub increment: Option<f64>,
    pub seconds: f64,
    /// Factored solves issued by this step.
    pub solves: u64,
}

/// Largest temporaries allocated by a step, for the memory contract.
#[derive(Debug, Clone, Serialize)]
pub struct StepShape {
    pub j: usize,
    pub max_rows: usize,
    pub max_cols: usize,
    pub max_elems: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
    pub total_solves: u64,
    /// Pivoted-QR rank threshold scale in effect.
    pub qr_rank_u: f64,
    pub shape_audit: Vec<StepShape>,
    /// Level of the returned iterate (differs from the last level only when
    /// the run diverged and an earlier iterate was better).
    pub returned_level: usize,
}

#[derive(Debug)]
pub struct SolveResult {
    /// Primal solution factor (limit of the `H` iterates).
    pub x: LowRankGram,
    /// Dual solution factor (limit of the `G` iterates).
    pub y: Option<LowRankGram>,
    pub record: RunRecord,
}

#[derive(Default)]
struct ShapeProbe {
    max_rows: usize,
    max_cols: usize,
    max_elems: usize,
}

impl ShapeProbe {
    fn note(&mut self, rows: usize, cols: usize) {
        self.max_rows = self.max_rows.max(rows);
        self.max_cols = self.max_cols.max(cols);
        self.max_elems = self.max_elems.max(rows * cols);
    }

    fn note_mat(&mut self, m: &DMatrix<f64>) {
        self.note(m.nrows(), m.ncols());
    }
}

fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

fn rect_diag(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    crate::problem::vec_to_diag(v, rows, cols)
}

/// `1 + c * s_i^2` padded with ones to `len`.
fn upsilon_diag(s: &DVector<f64>, c: f64, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |i, _| {
        if i < s.len() {
            1.0 + c * s[i] * s[i]
        } else {
            1.0
        }
    })
}

fn scale_cols(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for j in 0..out.ncols() {
        out.column_mut(j).scale_mut(w[j]);
    }
    out
}

/// Level-1 initialization: pivoted QRs of the propagated seed blocks, the
/// seed-kernel SVD, the two weighted SVDs and the first truncation.
pub fn init_j1(
    seed: &SdaSeed,
    op: &ShiftedOperator,
    gamma: f64,
    eps_g: f64,
    eps_h: f64,
) -> Result<(SideState, SideState, CouplingState, LowRankGram, LowRankGram)> {
    let m = seed.u0.ncols();
    let l = seed.v0.ncols();

    let u1 = op.apply_a_tilde(&seed.u0, false);
    let v1 = op.apply_a_tilde(&seed.v0, true);

    let n = seed.u0.nrows();
    let mut ublock = DMatrix::zeros(n, 2 * m);
    ublock.columns_mut(0, m).copy_from(&seed.u0);
    ublock.columns_mut(m, m).copy_from(&u1);
    let mut vblock = DMatrix::zeros(n, 2 * l);
    vblock.columns_mut(0, l).copy_from(&seed.v0);
    vblock.columns_mut(l, l).copy_from(&v1);

    let qr_u = kernels::qr_col_pivot(&ublock, kernels::DEFAULT_QR_RANK_U);
    if qr_u.rank() == 0 {
        return Err(Error::DegenerateProblem("input factor B is numerically zero"));
    }
    let qr_v = kernels::qr_col_pivot(&vblock, kernels::DEFAULT_QR_RANK_U);
    if qr_v.rank() == 0 {
        return Err(Error::DegenerateProblem("output factor C is numerically zero"));
    }

    let mut y1 = DMatrix::zeros(2 * m, 2 * l);
    y1.view_mut((0, l), (m, l)).copy_from(&seed.y0);
    y1.view_mut((m, 0), (m, l)).copy_from(&seed.y0);
    y1.view_mut((m, l), (m, l))
        .copy_from(&(&seed.t0 * (2.0 * gamma)));
    let y_svd = kernels::svd(&y1, false)?;

    // Upsilon_1 carries the seed kernel directly, without the 4 gamma^2
    // factor of the later steps.
    let ups_g = upsilon_diag(&y_svd.s, 1.0, 2 * m);
    let ups_h = upsilon_diag(&y_svd.s, 1.0, 2 * l);

    let su = qr_u.r_unpermuted();
    let sv = qr_v.r_unpermuted();
    let gm_in = scale_cols(&(&su * &y_svd.u), &ups_g.map(|x| x.powf(-0.5)));
    let hm_in = scale_cols(&(&sv * &y_svd.v), &ups_h.map(|x| x.powf(-0.5)));

    let side_g = truncate_level(&qr_u.q, &gm_in, eps_g)?;
    let side_h = truncate_level(&qr_v.q, &hm_in, eps_h)?;

    let gt = LowRankGram::new(side_g.q.clone(), side_g.sigma1.clone(), 2.0 * gamma);
    let ht = LowRankGram::new(side_h.q.clone(), side_h.sigma1.clone(), 2.0 * gamma);
    let coupling = CouplingState {
        j: 1,
        gamma,
        carry: KernelCarry::Seed {
            sigma_y: y_svd.s,
            rows: 2 * m,
            cols: 2 * l,
        },
    };
    Ok((side_g, side_h, coupling, gt, ht))
}

/// SVD, split and basis rotation shared by the init and the doubling step.
fn truncate_level(q_hat: &DMatrix<f64>, m_in: &DMatrix<f64>, eps: f64) -> Result<SideState> {
    let f = kernels::svd(m_in, true)?;
    if f.s.len() == 0 || f.s[0] <= 0.0 {
        return Err(Error::KernelDegenerate);
    }
    if !f.s.iter().all(|x| x.is_finite()) {
        return Err(Error::NearSingularPencil { cond: f64::INFINITY });
    }
    let split = kernels::truncation_split(&f.s, eps);
    let r = split.r;
    let theta1 = f.u.columns(0, r).into_owned();
    let phi1 = f.v.columns(0, r).into_owned();
    let sigma1 = DVector::from_fn(r, |i, _| f.s[i]);
    Ok(SideState {
        q: q_hat * &theta1,
        sigma1,
        phi1,
    })
}

/// `K_1 = Phi_1G^T Sigma_1Y Phi_1H` from the seed-kernel singular values.
pub fn compute_k1(
    phi1_g: &DMatrix<f64>,
    sigma_y: &DVector<f64>,
    rows: usize,
    cols: usize,
    phi1_h: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if phi1_g.nrows() != rows || phi1_h.nrows() != cols {
        return Err(Error::DimensionMismatch {
            context: "K_1 factors",
            expected: format!("{rows} and {cols} rows"),
            found: format!("{} and {}", phi1_g.nrows(), phi1_h.nrows()),
        });
    }
    Ok(phi1_g.transpose() * rect_diag(sigma_y, rows, cols) * phi1_h)
}

/// Coupling-kernel recursion: `K_j` from `K_{j-1}`, the previous small SVD
/// and the current kept right factors.
pub fn advance_k(
    k_prev: &DMatrix<f64>,
    uy: &DMatrix<f64>,
    sy: &DVector<f64>,
    vy: &DMatrix<f64>,
    phi1_g: &DMatrix<f64>,
    phi1_h: &DMatrix<f64>,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    let rg = uy.nrows();
    let rh = vy.nrows();
    if k_prev.nrows() != rg
        || k_prev.ncols() != rh
        || phi1_g.nrows() != 2 * rg
        || phi1_h.nrows() != 2 * rh
    {
        return Err(Error::DimensionMismatch {
            context: "coupling kernel recursion",
            expected: format!("K {rg}x{rh}, Phi with {} and {} rows", 2 * rg, 2 * rh),
            found: format!(
                "K {}x{}, Phi with {} and {} rows",
                k_prev.nrows(),
                k_prev.ncols(),
                phi1_g.nrows(),
                phi1_h.nrows()
            ),
        });
    }
    let ups_g = upsilon_diag(sy, 4.0 * gamma * gamma, rg);
    let ups_h = upsilon_diag(sy, 4.0 * gamma * gamma, rh);
    let sy_mat = rect_diag(sy, rg, rh);

    let kv = k_prev * vy;
    let tl = &kv * sy_mat.transpose() * uy.transpose() * k_prev * (2.0 * gamma);
    let tr = scale_cols(&kv, &ups_h.map(f64::sqrt));
    let bl = {
        let ut_k = uy.transpose() * k_prev;
        let mut out = ut_k;
        for i in 0..rg {
            out.row_mut(i).scale_mut(ups_g[i].sqrt());
        }
        out
    };
    let br = &sy_mat * (2.0 * gamma);

    let mut mid = DMatrix::zeros(2 * rg, 2 * rh);
    mid.view_mut((0, 0), (rg, rh)).copy_from(&tl);
    mid.view_mut((0, rh), (rg, rh)).copy_from(&tr);
    mid.view_mut((rg, 0), (rg, rh)).copy_from(&bl);
    mid.view_mut((rg, rh), (rg, rh)).copy_from(&br);

    Ok(phi1_g.transpose() * mid * phi1_h)
}

/// `L_j^G = 2g S_G K S_H Omega^T`, `L_j^H = 2g S_H K^T S_G Omega`.
pub fn compute_l(
    sigma_g: &DVector<f64>,
    sigma_h: &DVector<f64>,
    k_g: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    gamma: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let rg = sigma_g.len();
    let rh = sigma_h.len();
    if k_g.nrows() != rg || k_g.ncols() != rh || omega.nrows() != rg || omega.ncols() != rh {
        return Err(Error::DimensionMismatch {
            context: "L factors",
            expected: format!("{rg}x{rh}"),
            found: format!("{}x{}", k_g.nrows(), k_g.ncols()),
        });
    }
    let lg = diag(sigma_g) * k_g * diag(sigma_h) * omega.transpose() * (2.0 * gamma);
    let lh = diag(sigma_h) * k_g.transpose() * diag(sigma_g) * omega * (2.0 * gamma);
    Ok((lg, lh))
}

/// Outcome of one combined doubling-truncation step.
pub struct StepOutcome {
    pub side_g: SideState,
    pub side_h: SideState,
    pub coupling: CouplingState,
    pub gt: LowRankGram,
    pub ht: LowRankGram,
    pub shape: StepShape,
}

/// One combined doubling-truncation step from level `j` to `j+1`:
/// basis extension by `A_tilde^{2^j}` images, the small cross SVD, the
/// kernel recursion, the two block SVDs in eliminated form, and the
/// truncation. Exactly `2^j (r_G + r_H)` factored solves.
pub fn doubling_truncation_step(
    side_g: &SideState,
    side_h: &SideState,
    coupling: &CouplingState,
    op: &ShiftedOperator,
    eps_g: f64,
    eps_h: f64,
) -> Result<StepOutcome> {
    let j = coupling.j;
    let gamma = coupling.gamma;
    let e = 1u64 << j;
    let rg = side_g.rank();
    let rh = side_h.rank();
    let mut probe = ShapeProbe::default();

    let w_u = op.apply_a_tilde_power(&side_g.q, e, false);
    let w_v = op.apply_a_tilde_power(&side_h.q, e, true);
    probe.note_mat(&w_u);
    probe.note_mat(&w_v);
    if !w_u.iter().all(|x| x.is_finite()) || !w_v.iter().all(|x| x.is_finite()) {
        return Err(Error::NearSingularPencil { cond: f64::INFINITY });
    }

    let ext_u = kernels::extend_basis(&side_g.q, &w_u);
    let ext_v = kernels::extend_basis(&side_h.q, &w_v);
    probe.note_mat(&ext_u.q_new);
    probe.note_mat(&ext_v.q_new);

    let omega = side_g.q.transpose() * &side_h.q;
    probe.note_mat(&omega);

    let core = diag(&side_g.sigma1) * &omega * diag(&side_h.sigma1);
    let core_svd = kernels::svd(&core, false)?;
    let (uy, sy, vy) = (core_svd.u, core_svd.s, core_svd.v);

    let k_g = match &coupling.carry {
        KernelCarry::Seed { sigma_y, rows, cols } => {
            compute_k1(&side_g.phi1, sigma_y, *rows, *cols, &side_h.phi1)?
        }
        KernelCarry::Advanced { k, uy, sy, vy } => advance_k(
            k,
            uy,
            sy,
            vy,
            &side_g.phi1,
            &side_h.phi1,
            gamma,
        )?,
    };
    if !k_g.iter().all(|x| x.is_finite()) {
        return Err(Error::NearSingularPencil { cond: f64::INFINITY });
    }
    probe.note_mat(&k_g);

    let ups_g = upsilon_diag(&sy, 4.0 * gamma * gamma, rg);
    let ups_h = upsilon_diag(&sy, 4.0 * gamma * gamma, rh);
    let inv_sqrt_g = ups_g.map(|x| x.powf(-0.5));
    let inv_sqrt_h = ups_h.map(|x| x.powf(-0.5));
    let sy_mat = rect_diag(&sy, rg, rh);

    // G-side block in eliminated form:
    // [[S_G, -2g S_G K V_Y S_Y^T U_G^-1/2], [0, S_G U_Y U_G^-1/2]]
    let bg = {
        let tr = scale_cols(
            &(diag(&side_g.sigma1) * &k_g * &vy * sy_mat.transpose()),
            &inv_sqrt_g,
        ) * (-2.0 * gamma);
        let br = scale_cols(&(diag(&side_g.sigma1) * &uy), &inv_sqrt_g);
        let mut out = DMatrix::zeros(2 * rg, 2 * rg);
        out.view_mut((0, 0), (rg, rg)).copy_from(&diag(&side_g.sigma1));
        out.view_mut((0, rg), (rg, rg)).copy_from(&tr);
        out.view_mut((rg, rg), (rg, rg)).copy_from(&br);
        out
    };
    let bh = {
        let tr = scale_cols(
            &(diag(&side_h.sigma1) * k_g.transpose() * &uy * &sy_mat),
            &inv_sqrt_h,
        ) * (-2.0 * gamma);
        let br = scale_cols(&(diag(&side_h.sigma1) * &vy), &inv_sqrt_h);
        let mut out = DMatrix::zeros(2 * rh, 2 * rh);
        out.view_mut((0, 0), (rh, rh)).copy_from(&diag(&side_h.sigma1));
        out.view_mut((0, rh), (rh, rh)).copy_from(&tr);
        out.view_mut((rh, rh), (rh, rh)).copy_from(&br);
        out
    };
    probe.note_mat(&bg);
    probe.note_mat(&bh);

    let lmat_u = stack_extension(rg, &ext_u.r12, &ext_u.r2);
    let lmat_v = stack_extension(rh, &ext_v.r12, &ext_v.r2);
    probe.note_mat(&lmat_u);
    probe.note_mat(&lmat_v);

    let g_in = &lmat_u * &bg;
    let h_in = &lmat_v * &bh;
    probe.note_mat(&g_in);
    probe.note_mat(&h_in);

    let qhat_u = hstack(&side_g.q, &ext_u.q_new);
    let qhat_v = hstack(&side_h.q, &ext_v.q_new);
    probe.note_mat(&qhat_u);
    probe.note_mat(&qhat_v);

    let side_g_next = truncate_level(&qhat_u, &g_in, eps_g)?;
    let side_h_next = truncate_level(&qhat_v, &h_in, eps_h)?;
    probe.note_mat(&side_g_next.q);
    probe.note_mat(&side_h_next.q);

    let gt = LowRankGram::new(
        side_g_next.q.clone(),
        side_g_next.sigma1.clone(),
        2.0 * gamma,
    );
    let ht = LowRankGram::new(
        side_h_next.q.clone(),
        side_h_next.sigma1.clone(),
        2.0 * gamma,
    );
    let coupling_next = CouplingState {
        j: j + 1,
        gamma,
        carry: KernelCarry::Advanced { k: k_g, uy, sy, vy },
    };
    let shape = StepShape {
        j,
        max_rows: probe.max_rows,
        max_cols: probe.max_cols,
        max_elems: probe.max_elems,
    };
    Ok(StepOutcome {
        side_g: side_g_next,
        side_h: side_h_next,
        coupling: coupling_next,
        gt,
        ht,
        shape,
    })
}

/// `[[I_r, R12], [0, R2]]` with `p = r + rows(R2)` rows.
fn stack_extension(r: usize, r12: &DMatrix<f64>, r2: &DMatrix<f64>) -> DMatrix<f64> {
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

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Full solve: weight fold, validation, seeding, level-1 initialization and
/// the doubling loop with residual-based stopping.
pub fn solve(p: &CareProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    validate_problem(p)?;
    let p = fold_weight(p)?;
    let op = build_shifted_operator(&p, cfg.dense_threshold)?;
    // Only the low-rank seed blocks are needed here.
    let seed = sda_seed(&p, &op, 0)?;

    let mut record = RunRecord {
        iterations: Vec::new(),
        termination: Termination::MaxIterations,
        total_solves: 0,
        qr_rank_u: kernels::DEFAULT_QR_RANK_U,
        shape_audit: Vec::new(),
        returned_level: 0,
    };

    let start = Instant::now();
    let solves_before = op.solve_count();
    let (mut side_g, mut side_h, mut coupling, mut gt, mut ht) = init_j1(
        &seed,
        &op,
        p.gamma,
        cfg.eps_g_for(1),
        cfg.eps_for(1),
    )?;
    let mut prev_ht = ht.clone();

    let rho_x = residual_lowrank(&p, &ht).rho;
    let rho_y = cfg
        .compute_dual
        .then(|| residual_dual_lowrank(&p, &gt).rho);
    push_iteration(
        &mut record,
        cfg,
        IterationRecord {
            j: 1,
            rho_x,
            rho_y,
            rank_x: side_h.rank(),
            rank_y: side_g.rank(),
            increment: None,
            seconds: start.elapsed().as_secs_f64(),
            solves: op.solve_count() - solves_before,
        },
    );

    let mut best = (rho_x, gt.clone(), ht.clone(), 1usize);
    let mut diverge_streak = 0usize;
    let mut termination = Termination::MaxIterations;

    if rho_x <= cfg.res_tol {
        termination = Termination::Converged;
    } else {
        for j in 1..cfg.max_iter {
            let iter_start = Instant::now();
            let solves_at = op.solve_count();
            let outcome = match doubling_truncation_step(
                &side_g,
                &side_h,
                &coupling,
                &op,
                cfg.eps_g_for(j + 1),
                cfg.eps_for(j + 1),
            ) {
                Ok(o) => o,
                Err(Error::NearSingularPencil { .. }) => {
                    termination = Termination::NearSingularPencil;
                    break;
                }
                Err(e) => return Err(e),
            };
            side_g = outcome.side_g;
            side_h = outcome.side_h;
            coupling = outcome.coupling;
            gt = outcome.gt;
            ht = outcome.ht;
            record.shape_audit.push(outcome.shape);

            let rho_x = residual_lowrank(&p, &ht).rho;
            let rho_y = cfg
                .compute_dual
                .then(|| residual_dual_lowrank(&p, &gt).rho);
            let increment = {
                let denom = ht.frobenius_norm();
                let diff = ht.sub_frobenius_norm(&prev_ht);
                Some(if denom > 0.0 { diff / denom } else { diff })
            };
            prev_ht = ht.clone();
            push_iteration(
                &mut record,
                cfg,
                IterationRecord {
                    j: j + 1,
                    rho_x,
                    rho_y,
                    rank_x: side_h.rank(),
                    rank_y: side_g.rank(),
                    increment,
                    seconds: iter_start.elapsed().as_secs_f64(),
                    solves: op.solve_count() - solves_at,
                },
            );

            if !rho_x.is_finite() {
                termination = Termination::NearSingularPencil;
                break;
            }
            if rho_x < best.0 {
                best = (rho_x, gt.clone(), ht.clone(), j + 1);
            }
            if rho_x <= cfg.res_tol {
                termination = Termination::Converged;
                break;
            }
            if rho_x > 100.0 * best.0 {
                diverge_streak += 1;
                if diverge_streak >= 3 {
                    termination = Termination::Diverged;
                    break;
                }
            } else {
                diverge_streak = 0;
            }
        }
    }

    record.termination = termination.clone();
    record.total_solves = op.solve_count();
    let (x, y, level) = match termination {
        Termination::Diverged | Termination::NearSingularPencil => {
            (best.2.clone(), best.1.clone(), best.3)
        }
        _ => (ht, gt, coupling.j),
    };
    record.returned_level = level;
    Ok(SolveResult {
        x,
        y: cfg.compute_dual.then_some(y),
        record,
    })
}

fn push_iteration(record: &mut RunRecord, cfg: &SolverConfig, it: IterationRecord) {
    if !cfg.record_history {
        record.iterations.clear();
    }
    record.iterations.push(it);
}
