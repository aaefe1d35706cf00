//! Damped quasi-Newton curvature model.
//!
//! The raw matrix accumulates damped BFGS updates of the Lagrangian
//! gradient difference; `assemble_b` then scales it with the penalty
//! weight and clips its spectrum so the direction subproblem always sees a
//! uniformly positive definite, bounded quadratic term.

use nalgebra::{DMatrix, DVector};

use super::config::SolverConfig;
use crate::model::{self, Evaluation};
use crate::symmat::{BlockSymMatrix, SymBlock, SymMatError};

const DAMPING_THRESHOLD: f64 = 0.2;
const STEP_FLOOR: f64 = 1e-14;
const SIZING_FLOOR: f64 = 1e-6;

/// Gradient in `x` of `f + mu' h + <Y, G>`.
pub fn lagrangian_gradient(
    e: &Evaluation,
    mu: &DVector<f64>,
    y: &BlockSymMatrix,
) -> DVector<f64> {
    let mut g = e.grad.clone();
    if e.eq.len() > 0 {
        g += e.eq_jac.transpose() * mu;
    }
    g + model::dg_adjoint(e, y)
}

/// One damped BFGS update from the step between two evaluated points,
/// measuring curvature of the Lagrangian at the newest multipliers.
/// Degenerate steps leave the matrix unchanged; damping keeps it positive
/// definite regardless of the curvature sign.
///
/// When the stored model claims much more curvature along the step than
/// the secant pair measured, the whole matrix is first shrunk toward the
/// measured scale. Multiplier estimates early in a run can be orders of
/// magnitude off, and without the shrink that stale weight survives
/// until it stalls the step length.
pub fn bfgs_update(
    b: &DMatrix<f64>,
    e_old: &Evaluation,
    e_new: &Evaluation,
    mu: &DVector<f64>,
    y_mult: &BlockSymMatrix,
) -> DMatrix<f64> {
    let s = &e_new.x - &e_old.x;
    if s.norm() <= STEP_FLOOR {
        return b.clone();
    }
    let grad_diff = lagrangian_gradient(e_new, mu, y_mult) - lagrangian_gradient(e_old, mu, y_mult);
    let mut bs = b * &s;
    let mut sbs = bs.dot(&s);
    if !(sbs > 0.0) || !sbs.is_finite() {
        return b.clone();
    }
    let sy = s.dot(&grad_diff);
    let tau = if sy > 0.0 && sy < sbs { (sy / sbs).max(SIZING_FLOOR) } else { 1.0 };
    let b_sized = b * tau;
    bs *= tau;
    sbs *= tau;
    let theta = if sy >= DAMPING_THRESHOLD * sbs {
        1.0
    } else {
        (1.0 - DAMPING_THRESHOLD) * sbs / (sbs - sy)
    };
    let y_damped = &grad_diff * theta + &bs * (1.0 - theta);
    let syd = s.dot(&y_damped);
    if !(syd > 0.0) || !syd.is_finite() {
        return b.clone();
    }
    let mut next = b_sized;
    // rank-one corrections: - Bs(Bs)'/s'Bs + yy'/s'y
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            next[(i, j)] += -bs[i] * bs[j] / sbs + y_damped[i] * y_damped[j] / syd;
        }
    }
    next
}

#[derive(Debug, Clone)]
pub struct AssembledB {
    pub b: DMatrix<f64>,
    /// Post-clip spectrum bounds, for run records.
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Scales the accumulated matrix by `max(bfgs_floor, rho)` and clips its
/// eigenvalues into the configured bounds.
pub fn assemble_b(
    b_bfgs: &DMatrix<f64>,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<AssembledB, SymMatError> {
    let scale = rho.max(cfg.bfgs_floor);
    let (lo, hi) = cfg.b_eig_bounds;
    let scaled = b_bfgs * scale;
    let blk = SymBlock::from_dense_symmetrize(&scaled);
    let (vals, vecs) = blk.eigen()?;
    let n = b_bfgs.nrows();
    let mut out = DMatrix::zeros(n, n);
    let mut lmin = f64::INFINITY;
    let mut lmax = f64::NEG_INFINITY;
    for (k, &l) in vals.iter().enumerate() {
        let c = l.clamp(lo, hi);
        lmin = lmin.min(c);
        lmax = lmax.max(c);
        let col = vecs.column(k);
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] += c * col[i] * col[j];
            }
        }
    }
    let out = (&out + out.transpose()) * 0.5;
    Ok(AssembledB { b: out, lambda_min: lmin, lambda_max: lmax })
}
