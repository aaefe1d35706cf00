//! Convex quadratic cone subproblems and their interior-point solver.
//!
//! Normal form handled here:
//!
//! ```txt
//!     minimize  (1/2) z' Q z + c' z
//!     s.t.      A_eq z = b_eq
//!               z_i >= 0           for i in nonneg_idx
//!               M(z) = M_0 + sum_i z_i M_i  negative semidefinite
//! ```
//!
//! with `Q` positive semidefinite and the `M_i` sharing one block
//! structure. Both solver subproblems (feasibility step and search
//! direction) are assembled into this form by the builders below.
//!
//! The engine is an infeasible-start primal-dual path-following method:
//! Nesterov-Todd scaling on the semidefinite block, the usual log-barrier
//! treatment of the nonnegative variables, and a Mehrotra
//! predictor-corrector step. The quadratic term stays in the Newton system
//! directly rather than through an epigraph reformulation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use crate::model::Evaluation;
use crate::symmat::{self, BlockSymMatrix};

mod ipm;

/// Convex quadratic program over equalities, a nonnegative orthant slice,
/// and one block semidefinite constraint.
#[derive(Debug, Clone)]
pub struct ConicQP {
    pub nv: usize,
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    /// Strictly increasing variable indices constrained to be nonnegative.
    pub nonneg_idx: Vec<usize>,
    /// Constant term of the matrix constraint; an empty block list means
    /// there is no semidefinite part.
    pub psd_m0: BlockSymMatrix,
    /// Coefficient of `z_i` in the matrix constraint, one per variable.
    pub psd_mi: Vec<BlockSymMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeStatus {
    Optimal,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub z: DVector<f64>,
    /// Equality multipliers.
    pub mu: DVector<f64>,
    /// Multiplier of the semidefinite constraint, positive semidefinite.
    pub y: BlockSymMatrix,
    /// Multipliers of the nonnegative bounds, aligned with `nonneg_idx`.
    pub nu: DVector<f64>,
    pub status: ConeStatus,
    /// Worst KKT measure of the returned point, recomputed from scratch.
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Primal objective value at `z`.
    pub obj: f64,
}

/// Tolerances and limits of the interior-point engine.
#[derive(Debug, Clone, Serialize)]
pub struct SubsolverConfig {
    /// Base KKT tolerance; scaled by `1 + |b_eq| + |c|`.
    pub tol_kkt: f64,
    /// Ceiling on the scaled tolerance so large first iterates still get
    /// solved to a tight absolute accuracy.
    pub tol_abs_cap: f64,
    pub max_iter: usize,
    pub frac_to_boundary: f64,
    /// Magnitude of the unit shift used to start inside the cones.
    pub init_shift: f64,
}

impl Default for SubsolverConfig {
    fn default() -> Self {
        SubsolverConfig {
            tol_kkt: 1e-9,
            tol_abs_cap: 1e-8,
            max_iter: 200,
            frac_to_boundary: 0.99,
            init_shift: 1.0,
        }
    }
}

impl ConicQP {
    /// Structural checks: shapes line up, `Q` is symmetric and shows no
    /// negative curvature on deterministic probe directions.
    pub fn validate(&self) -> Result<(), String> {
        let nv = self.nv;
        if self.q.nrows() != nv || self.q.ncols() != nv {
            return Err(format!("Q is {}x{}, expected {nv}x{nv}", self.q.nrows(), self.q.ncols()));
        }
        if self.c.len() != nv {
            return Err(format!("c has length {}, expected {nv}", self.c.len()));
        }
        if self.a_eq.ncols() != nv && self.a_eq.nrows() != 0 {
            return Err(format!("A_eq has {} columns, expected {nv}", self.a_eq.ncols()));
        }
        if self.b_eq.len() != self.a_eq.nrows() {
            return Err("b_eq length does not match A_eq".into());
        }
        let qscale = 1.0 + self.q.amax();
        for j in 0..nv {
            for i in 0..j {
                if (self.q[(i, j)] - self.q[(j, i)]).abs() > 1e-9 * qscale {
                    return Err(format!("Q is not symmetric at ({i},{j})"));
                }
            }
        }
        let mut prev = None;
        for &i in &self.nonneg_idx {
            if i >= nv {
                return Err(format!("nonneg index {i} out of range"));
            }
            if prev.map_or(false, |p| p >= i) {
                return Err("nonneg_idx must be strictly increasing".into());
            }
            prev = Some(i);
        }
        if self.psd_mi.len() != nv {
            return Err(format!("expected {nv} matrix coefficients, got {}", self.psd_mi.len()));
        }
        for (i, m) in self.psd_mi.iter().enumerate() {
            if !m.same_shape(&self.psd_m0) {
                return Err(format!("matrix coefficient {i} has a different block structure"));
            }
        }
        // negative-curvature probe on pseudo-random directions; allows the
        // rounding floor of accumulating nv products of entries up to |Q|
        let mut state = 0x243f6a8885a308d3u64;
        for _ in 0..8 {
            let z = DVector::from_fn(nv, |_, _| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            });
            let nz2 = z.norm_squared();
            if nz2 == 0.0 {
                continue;
            }
            let quad = (&self.q * &z).dot(&z);
            if quad < -1e-10 * qscale * nz2 {
                return Err(format!("Q shows negative curvature: z'Qz = {quad:e}"));
            }
        }
        Ok(())
    }

    /// Serializes the full problem data for bug reports.
    pub fn to_debug_value(&self) -> serde_json::Value {
        let dense = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
        };
        let blocks = |b: &BlockSymMatrix| -> Vec<Vec<Vec<f64>>> {
            b.blocks().iter().map(|blk| dense(&blk.to_dense())).collect()
        };
        json!({
            "nv": self.nv,
            "dims": self.psd_m0.dims(),
            "q": dense(&self.q),
            "c": self.c.iter().copied().collect::<Vec<_>>(),
            "a_eq": dense(&self.a_eq),
            "b_eq": self.b_eq.iter().copied().collect::<Vec<_>>(),
            "nonneg_idx": self.nonneg_idx,
            "m0": blocks(&self.psd_m0),
            "mi": self.psd_mi.iter().map(blocks).collect::<Vec<_>>(),
        })
    }

    pub fn dump_json(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_debug_value()).unwrap())
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * (&self.q * z).dot(z) + self.c.dot(z)
    }

    /// Value of the matrix constraint at `z`.
    pub fn psd_value(&self, z: &DVector<f64>) -> BlockSymMatrix {
        let mut m = self.psd_m0.clone();
        for (i, mi) in self.psd_mi.iter().enumerate() {
            if z[i] != 0.0 {
                m = m.add_scaled(z[i], mi);
            }
        }
        m
    }
}

/// Solves the conic QP. Failures are reported through `status`; the
/// returned point is the best iterate seen.
pub fn solve_conic_qp(qp: &ConicQP, cfg: &SubsolverConfig) -> ConicSolution {
    if let Err(msg) = qp.validate() {
        panic!("solve_conic_qp called with malformed problem: {msg}");
    }
    ipm::solve(qp, cfg)
}

/// Worst KKT measure of a candidate solution, recomputed from the problem
/// data alone: stationarity, primal feasibility, dual cone membership, and
/// complementarity.
pub fn kkt_residual(qp: &ConicQP, sol: &ConicSolution) -> f64 {
    let y_dense: Vec<DMatrix<f64>> = sol.y.blocks().iter().map(|b| b.to_dense()).collect();
    kkt_residual_parts(qp, &sol.z, &sol.mu, &sol.nu, &y_dense).worst()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KktParts {
    pub stationarity: f64,
    pub primal: f64,
    pub dual_cone: f64,
    pub complementarity: f64,
}

impl KktParts {
    pub fn worst(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual_cone).max(self.complementarity)
    }
}

pub(crate) fn kkt_residual_parts(
    qp: &ConicQP,
    z: &DVector<f64>,
    mu: &DVector<f64>,
    nu: &DVector<f64>,
    y_dense: &[DMatrix<f64>],
) -> KktParts {
    let mut r_d = &qp.q * z + &qp.c;
    if qp.a_eq.nrows() > 0 {
        r_d += qp.a_eq.transpose() * mu;
    }
    for (i, mi) in qp.psd_mi.iter().enumerate() {
        let mut acc = 0.0;
        for (b, blk) in mi.blocks().iter().enumerate() {
            let d = blk.to_dense();
            acc += d.zip_fold(&y_dense[b], 0.0, |s, a, b| s + a * b);
        }
        r_d[i] += acc;
    }
    for (k, &i) in qp.nonneg_idx.iter().enumerate() {
        r_d[i] -= nu[k];
    }
    let stationarity = r_d.amax();

    let mut primal: f64 = 0.0;
    if qp.a_eq.nrows() > 0 {
        primal = primal.max((&qp.a_eq * z - &qp.b_eq).amax());
    }
    if qp.psd_m0.order() > 0 {
        let mval = qp.psd_value(z);
        let lmax = symmat::lambda_max(&mval).unwrap_or(f64::INFINITY);
        primal = primal.max(lmax.max(0.0));
    }
    for &i in &qp.nonneg_idx {
        primal = primal.max((-z[i]).max(0.0));
    }

    let mut dual_cone: f64 = 0.0;
    for yb in y_dense {
        if yb.nrows() > 0 {
            let blk = crate::symmat::SymBlock::from_dense_symmetrize(yb);
            let (vals, _) = blk.eigen().unwrap();
            let lmin = vals.last().copied().unwrap_or(0.0);
            dual_cone = dual_cone.max((-lmin).max(0.0));
        }
    }
    for k in 0..nu.len() {
        dual_cone = dual_cone.max((-nu[k]).max(0.0));
    }

    let mut complementarity: f64 = 0.0;
    if qp.psd_m0.order() > 0 {
        let mval = qp.psd_value(z);
        let mut ip = 0.0;
        for (b, blk) in mval.blocks().iter().enumerate() {
            let d = blk.to_dense();
            ip += d.zip_fold(&y_dense[b], 0.0, |s, a, b| s + a * b);
        }
        complementarity = ip.abs();
    }
    let mut lp = 0.0;
    for (k, &i) in qp.nonneg_idx.iter().enumerate() {
        lp += nu[k] * z[i];
    }
    complementarity = complementarity.max(lp.abs());

    KktParts { stationarity, primal, dual_cone, complementarity }
}

/// Assembles the feasibility subproblem at an evaluated point: minimize the
/// linearized constraint violation plus a small quadratic damping term.
///
/// Variables are `(d, r, s, t)`: the step, the positive and negative parts
/// of the linearized equality residual, and the spectral bound on the
/// linearized matrix constraint. `r`, `s`, `t` are nonnegative; the
/// equalities read `h + Dh d - r + s = 0` and the cone constraint is
/// `G + DG d - t I <= 0`.
pub fn build_feasibility_qp(e: &Evaluation, b_fea: &DMatrix<f64>) -> ConicQP {
    let n = e.x.len();
    let l = e.eq.len();
    let nv = n + 2 * l + 1;
    assert_eq!(b_fea.nrows(), n, "damping matrix must be n x n");

    let mut q = DMatrix::zeros(nv, nv);
    q.view_mut((0, 0), (n, n)).copy_from(b_fea);

    let mut c = DVector::zeros(nv);
    for i in n..nv {
        c[i] = 1.0;
    }

    let mut a_eq = DMatrix::zeros(l, nv);
    a_eq.view_mut((0, 0), (l, n)).copy_from(&e.eq_jac);
    for r in 0..l {
        a_eq[(r, n + r)] = -1.0;
        a_eq[(r, n + l + r)] = 1.0;
    }
    let b_eq = -e.eq.clone();

    let dims = e.mat.dims();
    let mut psd_mi = Vec::with_capacity(nv);
    for i in 0..n {
        psd_mi.push(e.mat_partials[i].clone());
    }
    for _ in 0..2 * l {
        psd_mi.push(BlockSymMatrix::zeros(&dims));
    }
    psd_mi.push(BlockSymMatrix::scaled_identity(&dims, -1.0));

    ConicQP {
        nv,
        q,
        c,
        a_eq,
        b_eq,
        nonneg_idx: (n..nv).collect(),
        psd_m0: e.mat.clone(),
        psd_mi,
    }
}

/// Assembles the search-direction subproblem: minimize `rho g'd + (1/2)
/// d'B d` over steps whose linearized constraints match the relaxation
/// `(r, s, t)` found by the feasibility phase.
pub fn build_direction_qp(
    e: &Evaluation,
    b: &DMatrix<f64>,
    rho: f64,
    r: &DVector<f64>,
    s: &DVector<f64>,
    t: f64,
) -> ConicQP {
    let n = e.x.len();
    let l = e.eq.len();
    assert_eq!(b.nrows(), n, "curvature matrix must be n x n");
    assert_eq!(r.len(), l);
    assert_eq!(s.len(), l);

    ConicQP {
        nv: n,
        q: b.clone(),
        c: rho * &e.grad,
        a_eq: e.eq_jac.clone(),
        b_eq: r - s - &e.eq,
        nonneg_idx: Vec::new(),
        psd_m0: e.mat.shift_diag(-t),
        psd_mi: e.mat_partials.clone(),
    }
}
