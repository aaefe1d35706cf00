//! Primal-dual path-following engine behind `solve_conic_qp`.
//!
//! The dense KKT system is reduced to the variables `(dz, dmu)` by
//! eliminating the bound multipliers and, through the Nesterov-Todd
//! scaling, the semidefinite pair `(dS, dY)`. One factorization per
//! iteration serves both the predictor and the corrector right-hand
//! sides.

use nalgebra::{DMatrix, DVector, Dyn};

use super::{kkt_residual_parts, ConeStatus, ConicQP, ConicSolution, SubsolverConfig};
use crate::symmat::{BlockSymMatrix, SymBlock};

const EIG_FLOOR: f64 = 1e-150;
const STALL_STEP: f64 = 1e-8;
const STALL_LIMIT: usize = 5;
// consecutive iterations without a meaningful residual drop before giving up;
// degenerate cones (strict complementarity failing at the optimum) freeze the
// residual while the barrier parameter keeps collapsing, so waiting longer
// only drives the scaling toward breakdown
const NO_PROGRESS_LIMIT: usize = 15;

pub(super) fn solve(qp: &ConicQP, cfg: &SubsolverConfig) -> ConicSolution {
    Ipm::new(qp, cfg).run()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

struct SymEig {
    vals: Vec<f64>,
    vecs: DMatrix<f64>,
}

fn sym_eig(m: &DMatrix<f64>) -> Option<SymEig> {
    let blk = SymBlock::from_dense_symmetrize(m);
    let (vals, vecs) = blk.eigen().ok()?;
    Some(SymEig { vals, vecs })
}

impl SymEig {
    fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.vals.len();
        let mut out = DMatrix::zeros(n, n);
        for (k, &l) in self.vals.iter().enumerate() {
            let fk = f(l);
            if fk != 0.0 {
                let col = self.vecs.column(k);
                for j in 0..n {
                    for i in 0..n {
                        out[(i, j)] += fk * col[i] * col[j];
                    }
                }
            }
        }
        out
    }

    fn lambda_min(&self) -> f64 {
        self.vals.last().copied().unwrap_or(0.0)
    }
}

/// Solves (V X + X V) / 2 = C for symmetric X in the eigenbasis of V.
fn lyapunov_solve(v: &SymEig, c: &DMatrix<f64>) -> DMatrix<f64> {
    let ct = v.vecs.transpose() * c * &v.vecs;
    let n = v.vals.len();
    let mut xt = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let den = (v.vals[i] + v.vals[j]).max(EIG_FLOOR);
            xt[(i, j)] = 2.0 * ct[(i, j)] / den;
        }
    }
    symmetrize(&(&v.vecs * xt * v.vecs.transpose()))
}

/// Equality-constrained quadratic KKT system with static regularization
/// and iterative refinement against the unregularized matrix.
struct KktSolver {
    n: usize,
    p: usize,
    h: DMatrix<f64>,
    a: DMatrix<f64>,
    lu: nalgebra::linalg::LU<f64, Dyn, Dyn>,
}

impl KktSolver {
    fn factor(h: &DMatrix<f64>, a: &DMatrix<f64>) -> Option<KktSolver> {
        let n = h.nrows();
        let p = a.nrows();
        let scale = 1.0 + h.amax() + if p > 0 { a.amax() } else { 0.0 };
        // try the unshifted system first: any static shift proportional to the
        // largest entry can dwarf the smallest curvature when the barrier blows
        // up, and refinement against the true matrix then diverges
        for delta in [0.0, 1e-14 * scale, 1e-11 * scale, 1e-8 * scale] {
            let mut k = DMatrix::zeros(n + p, n + p);
            k.view_mut((0, 0), (n, n)).copy_from(h);
            for i in 0..n {
                k[(i, i)] += delta;
            }
            if p > 0 {
                k.view_mut((n, 0), (p, n)).copy_from(a);
                k.view_mut((0, n), (n, p)).copy_from(&a.transpose());
                for i in 0..p {
                    k[(n + i, n + i)] -= delta;
                }
            }
            let lu = k.clone().lu();
            let ones = DVector::from_element(n + p, 1.0);
            let Some(probe) = lu.solve(&ones) else {
                continue;
            };
            if !probe.iter().all(|v| v.is_finite()) {
                continue;
            }
            let back = &k * &probe;
            let res = (&back - &ones).amax();
            if res <= 1e-6 * (1.0 + probe.amax() * scale) {
                return Some(KktSolver { n, p, h: h.clone(), a: a.clone(), lu });
            }
        }
        None
    }

    fn residual(&self, rhs: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let dz = x.rows(0, self.n).clone_owned();
        let mut res = rhs.clone();
        let mut top = &self.h * &dz;
        if self.p > 0 {
            let dm = x.rows(self.n, self.p).clone_owned();
            top += self.a.transpose() * &dm;
            let bot = &self.a * &dz;
            for i in 0..self.p {
                res[self.n + i] -= bot[i];
            }
        }
        for i in 0..self.n {
            res[i] -= top[i];
        }
        res
    }

    fn solve(&self, r1: &DVector<f64>, r2: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let mut rhs = DVector::zeros(self.n + self.p);
        rhs.rows_mut(0, self.n).copy_from(r1);
        if self.p > 0 {
            rhs.rows_mut(self.n, self.p).copy_from(r2);
        }
        let mut x = self.lu.solve(&rhs)?;
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        // refine against the unshifted system, keeping the best iterate; stop
        // as soon as a pass stops paying for itself
        let mut best_res = self.residual(&rhs, &x).amax();
        for _ in 0..4 {
            let res = self.residual(&rhs, &x);
            let corr = self.lu.solve(&res)?;
            let cand = &x + &corr;
            if !cand.iter().all(|v| v.is_finite()) {
                break;
            }
            let cand_res = self.residual(&rhs, &cand).amax();
            if cand_res >= 0.5 * best_res {
                if cand_res < best_res {
                    x = cand;
                }
                break;
            }
            best_res = cand_res;
            x = cand;
        }
        Some((x.rows(0, self.n).clone_owned(), x.rows(self.n, self.p).clone_owned()))
    }
}

/// One semidefinite block with only the matrix coefficients that are
/// actually nonzero.
struct BlockData {
    dim: usize,
    m0: DMatrix<f64>,
    mi: Vec<(usize, DMatrix<f64>)>,
}

/// Per-block quantities derived from the Nesterov-Todd scaling point.
struct Scaling {
    w_half: DMatrix<f64>,
    w_inv_half: DMatrix<f64>,
    s_inv_half: DMatrix<f64>,
    y_inv_half: DMatrix<f64>,
    v: SymEig,
    /// Scaled coefficients, aligned with `BlockData::mi`.
    e: Vec<DMatrix<f64>>,
    /// Scaled cone residual `W^{-1/2} (M(z) + S) W^{-1/2}`.
    rc_scaled: DMatrix<f64>,
}

fn build_scaling(bd: &BlockData, s: &DMatrix<f64>, y: &DMatrix<f64>, rc: &DMatrix<f64>) -> Option<Scaling> {
    let se = sym_eig(s)?;
    if se.lambda_min() <= 0.0 {
        return None;
    }
    let s_half = se.apply(f64::sqrt);
    let s_inv_half = se.apply(|l| 1.0 / l.max(EIG_FLOOR).sqrt());
    let t = symmetrize(&(&s_half * y * &s_half));
    let te = sym_eig(&t)?;
    if te.lambda_min() <= 0.0 {
        return None;
    }
    let t_inv_half = te.apply(|l| 1.0 / l.max(EIG_FLOOR).sqrt());
    let w = symmetrize(&(&s_half * t_inv_half * &s_half));
    let we = sym_eig(&w)?;
    if we.lambda_min() <= 0.0 {
        return None;
    }
    let w_half = we.apply(f64::sqrt);
    let w_inv_half = we.apply(|l| 1.0 / l.max(EIG_FLOOR).sqrt());
    let ye = sym_eig(y)?;
    if ye.lambda_min() <= 0.0 {
        return None;
    }
    let y_inv_half = ye.apply(|l| 1.0 / l.max(EIG_FLOOR).sqrt());
    let v_mat = symmetrize(&(&w_inv_half * s * &w_inv_half));
    let v = sym_eig(&v_mat)?;
    let e = bd
        .mi
        .iter()
        .map(|(_, m)| symmetrize(&(&w_inv_half * m * &w_inv_half)))
        .collect();
    let rc_scaled = symmetrize(&(&w_inv_half * rc * &w_inv_half));
    let ok = |m: &DMatrix<f64>| m.iter().all(|x| x.is_finite());
    if !(ok(&w_half) && ok(&w_inv_half) && ok(&s_inv_half) && ok(&y_inv_half) && ok(&rc_scaled)) {
        return None;
    }
    Some(Scaling { w_half, w_inv_half, s_inv_half, y_inv_half, v, e, rc_scaled })
}

struct Directions {
    dz: DVector<f64>,
    dmu: DVector<f64>,
    dnu: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    dy: Vec<DMatrix<f64>>,
}

struct Ipm<'a> {
    qp: &'a ConicQP,
    cfg: &'a SubsolverConfig,
    blocks: Vec<BlockData>,
    nn: Vec<usize>,
    p: usize,
    cone_count: usize,
    z: DVector<f64>,
    mu: DVector<f64>,
    nu: DVector<f64>,
    s: Vec<DMatrix<f64>>,
    y: Vec<DMatrix<f64>>,
}

impl<'a> Ipm<'a> {
    fn new(qp: &'a ConicQP, cfg: &'a SubsolverConfig) -> Self {
        let nv = qp.nv;
        let mut blocks = Vec::new();
        for (b, blk) in qp.psd_m0.blocks().iter().enumerate() {
            let dim = blk.order();
            let mut mi = Vec::new();
            for (i, m) in qp.psd_mi.iter().enumerate() {
                let mb = m.block(b);
                if mb.norm_fro() > 0.0 {
                    mi.push((i, mb.to_dense()));
                }
            }
            blocks.push(BlockData { dim, m0: blk.to_dense(), mi });
        }
        let nn = qp.nonneg_idx.clone();
        let cone_count = nn.len() + blocks.iter().map(|b| b.dim).sum::<usize>();
        Ipm {
            qp,
            cfg,
            blocks,
            nn,
            p: qp.a_eq.nrows(),
            cone_count,
            z: DVector::zeros(nv),
            mu: DVector::zeros(qp.a_eq.nrows()),
            nu: DVector::zeros(0),
            s: Vec::new(),
            y: Vec::new(),
        }
    }

    fn tol_effective(&self) -> f64 {
        let scale = 1.0 + self.qp.b_eq.amax().max(0.0) + self.qp.c.amax();
        (self.cfg.tol_kkt * scale).min(self.cfg.tol_abs_cap).max(self.cfg.tol_kkt)
    }

    fn initialize(&mut self) {
        let shift = self.cfg.init_shift.max(1e-6);
        // start the duals at the scale of the stationarity data; a unit start
        // against a large objective makes the first centering steps overshoot
        // and the iteration can cycle instead of settling
        let dual = shift * (1.0 + self.qp.c.amax() + self.qp.q.amax());
        for &i in &self.nn {
            self.z[i] = shift;
        }
        self.nu = DVector::from_element(self.nn.len(), dual);
        for bd in &self.blocks {
            let mz = self.mat_value(bd);
            let lmax = sym_eig(&mz).map(|e| e.vals[0]).unwrap_or(0.0);
            let beta = shift + lmax.max(0.0);
            let mut s0 = -mz;
            for i in 0..bd.dim {
                s0[(i, i)] += beta;
            }
            self.s.push(s0);
            self.y.push(DMatrix::identity(bd.dim, bd.dim) * dual);
        }
    }

    fn mat_value(&self, bd: &BlockData) -> DMatrix<f64> {
        let mut m = bd.m0.clone();
        for (i, mi) in &bd.mi {
            if self.z[*i] != 0.0 {
                m += mi * self.z[*i];
            }
        }
        m
    }

    fn dual_residual(&self) -> DVector<f64> {
        let mut r_d = &self.qp.q * &self.z + &self.qp.c;
        if self.p > 0 {
            r_d += self.qp.a_eq.transpose() * &self.mu;
        }
        for (b, bd) in self.blocks.iter().enumerate() {
            for (i, mi) in &bd.mi {
                r_d[*i] += mi.zip_fold(&self.y[b], 0.0, |acc, a, y| acc + a * y);
            }
        }
        for (k, &i) in self.nn.iter().enumerate() {
            r_d[i] -= self.nu[k];
        }
        r_d
    }

    fn barrier_mu(&self) -> f64 {
        if self.cone_count == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for (k, &i) in self.nn.iter().enumerate() {
            total += self.z[i] * self.nu[k];
        }
        for (b, sb) in self.s.iter().enumerate() {
            total += sb.zip_fold(&self.y[b], 0.0, |acc, a, y| acc + a * y);
        }
        total / self.cone_count as f64
    }

    fn newton_step(
        &self,
        kkt: &KktSolver,
        scalings: &[Scaling],
        rc_blocks: &[DMatrix<f64>],
        r_d: &DVector<f64>,
        r_p: &DVector<f64>,
        d_targets: &[DMatrix<f64>],
        rc_nn: &DVector<f64>,
    ) -> Option<Directions> {
        let mut rhs1 = -r_d.clone();
        for (b, sc) in scalings.iter().enumerate() {
            let g_y = symmetrize(&(&sc.w_inv_half * (&d_targets[b] + &sc.rc_scaled) * &sc.w_inv_half));
            for (i, mi) in &self.blocks[b].mi {
                rhs1[*i] -= mi.zip_fold(&g_y, 0.0, |acc, a, g| acc + a * g);
            }
        }
        for (k, &i) in self.nn.iter().enumerate() {
            rhs1[i] += rc_nn[k] / self.z[i];
        }
        let rhs2 = -r_p.clone();
        let (dz, dmu) = kkt.solve(&rhs1, &rhs2)?;
        let mut dnu = DVector::zeros(self.nn.len());
        for (k, &i) in self.nn.iter().enumerate() {
            dnu[k] = (rc_nn[k] - self.nu[k] * dz[i]) / self.z[i];
        }
        let mut ds = Vec::with_capacity(self.blocks.len());
        let mut dy = Vec::with_capacity(self.blocks.len());
        for (b, sc) in scalings.iter().enumerate() {
            let mut inner = &d_targets[b] + &sc.rc_scaled;
            for (pos, (i, _)) in self.blocks[b].mi.iter().enumerate() {
                if dz[*i] != 0.0 {
                    inner += &sc.e[pos] * dz[*i];
                }
            }
            dy.push(symmetrize(&(&sc.w_inv_half * inner * &sc.w_inv_half)));
            let mut dsb = -rc_blocks[b].clone();
            for (i, mi) in &self.blocks[b].mi {
                if dz[*i] != 0.0 {
                    dsb -= mi * dz[*i];
                }
            }
            ds.push(dsb);
        }
        let fin = dz.iter().all(|v| v.is_finite())
            && dmu.iter().all(|v| v.is_finite())
            && dnu.iter().all(|v| v.is_finite())
            && ds.iter().all(|m| m.iter().all(|v| v.is_finite()))
            && dy.iter().all(|m| m.iter().all(|v| v.is_finite()));
        if !fin {
            return None;
        }
        Some(Directions { dz, dmu, dnu, ds, dy })
    }

    /// Largest step keeping every cone variable strictly feasible.
    fn max_step(&self, dirs: &Directions, scalings: &[Scaling]) -> f64 {
        let mut alpha = f64::INFINITY;
        for (k, &i) in self.nn.iter().enumerate() {
            if dirs.dz[i] < 0.0 {
                alpha = alpha.min(self.z[i] / -dirs.dz[i]);
            }
            if dirs.dnu[k] < 0.0 {
                alpha = alpha.min(self.nu[k] / -dirs.dnu[k]);
            }
        }
        for (b, sc) in scalings.iter().enumerate() {
            for (inv_half, delta) in
                [(&sc.s_inv_half, &dirs.ds[b]), (&sc.y_inv_half, &dirs.dy[b])]
            {
                let n = symmetrize(&(inv_half * delta * inv_half));
                if let Some(e) = sym_eig(&n) {
                    let lmin = e.lambda_min();
                    if lmin < 0.0 {
                        alpha = alpha.min(1.0 / -lmin);
                    }
                } else {
                    return 0.0;
                }
            }
        }
        alpha
    }

    fn complementarity_after(&self, dirs: &Directions, alpha: f64) -> f64 {
        let mut total = 0.0;
        for (k, &i) in self.nn.iter().enumerate() {
            total += (self.z[i] + alpha * dirs.dz[i]) * (self.nu[k] + alpha * dirs.dnu[k]);
        }
        for b in 0..self.blocks.len() {
            let s_new = &self.s[b] + &dirs.ds[b] * alpha;
            let y_new = &self.y[b] + &dirs.dy[b] * alpha;
            total += s_new.zip_fold(&y_new, 0.0, |acc, a, y| acc + a * y);
        }
        (total / self.cone_count.max(1) as f64).max(0.0)
    }

    fn take_step(&mut self, dirs: &Directions, alpha: f64) {
        self.z += &dirs.dz * alpha;
        if self.p > 0 {
            self.mu += &dirs.dmu * alpha;
        }
        self.nu += &dirs.dnu * alpha;
        for b in 0..self.blocks.len() {
            self.s[b] = symmetrize(&(&self.s[b] + &dirs.ds[b] * alpha));
            self.y[b] = symmetrize(&(&self.y[b] + &dirs.dy[b] * alpha));
        }
    }

    fn package(&self, status: ConeStatus, kkt: f64, iterations: usize) -> ConicSolution {
        let y = if self.blocks.is_empty() {
            BlockSymMatrix::zeros(&[])
        } else {
            BlockSymMatrix::new(self.y.iter().map(|m| SymBlock::from_dense_symmetrize(m)).collect())
        };
        ConicSolution {
            z: self.z.clone(),
            mu: self.mu.clone(),
            y,
            nu: self.nu.clone(),
            status,
            kkt_residual: kkt,
            iterations,
            obj: self.qp.objective(&self.z),
        }
    }

    fn solve_coneless(&mut self) -> ConicSolution {
        let rhs1 = -self.qp.c.clone();
        let rhs2 = self.qp.b_eq.clone();
        let sol = KktSolver::factor(&self.qp.q, &self.qp.a_eq).and_then(|k| k.solve(&rhs1, &rhs2));
        match sol {
            Some((z, mu)) => {
                self.z = z;
                self.mu = mu;
                let kkt = self.current_kkt();
                let status = if kkt <= self.tol_effective() {
                    ConeStatus::Optimal
                } else {
                    ConeStatus::NumericalFailure
                };
                self.package(status, kkt, 1)
            }
            None => self.package(ConeStatus::NumericalFailure, f64::INFINITY, 0),
        }
    }

    fn current_kkt(&self) -> f64 {
        kkt_residual_parts(self.qp, &self.z, &self.mu, &self.nu, &self.y).worst()
    }

    // hand back the best iterate seen so far; a finite residual means the
    // point is usable even though no optimality certificate was reached
    fn salvage(best: (f64, ConicSolution)) -> ConicSolution {
        let (k, mut sol) = best;
        sol.status = if k.is_finite() {
            ConeStatus::MaxIter
        } else {
            ConeStatus::NumericalFailure
        };
        sol.kkt_residual = k;
        sol
    }

    fn run(mut self) -> ConicSolution {
        if self.cone_count == 0 {
            return self.solve_coneless();
        }
        self.initialize();
        let tol = self.tol_effective();
        let tau = self.cfg.frac_to_boundary;
        let mut best: Option<(f64, ConicSolution)> = None;
        let mut stalls = 0usize;
        let mut since_drop = 0usize;

        for iter in 0..=self.cfg.max_iter {
            let kkt_now = self.current_kkt();
            log::trace!("ipm iter {iter}: kkt {kkt_now:.3e} mu {:.3e}", self.barrier_mu());
            let dropped = best
                .as_ref()
                .map_or(true, |(k, _)| kkt_now < *k * (1.0 - 1e-3));
            if best.as_ref().map_or(true, |(k, _)| kkt_now < *k) {
                best = Some((kkt_now, self.package(ConeStatus::MaxIter, kkt_now, iter)));
            }
            since_drop = if dropped { 0 } else { since_drop + 1 };
            if kkt_now <= tol {
                return self.package(ConeStatus::Optimal, kkt_now, iter);
            }
            if iter == self.cfg.max_iter || stalls >= STALL_LIMIT || since_drop >= NO_PROGRESS_LIMIT
            {
                break;
            }

            let mu_bar = self.barrier_mu();
            if !mu_bar.is_finite() || mu_bar <= 0.0 {
                break;
            }

            let rc_blocks: Vec<DMatrix<f64>> = self
                .blocks
                .iter()
                .enumerate()
                .map(|(b, bd)| self.mat_value(bd) + &self.s[b])
                .collect();
            let scalings: Option<Vec<Scaling>> = self
                .blocks
                .iter()
                .enumerate()
                .map(|(b, bd)| build_scaling(bd, &self.s[b], &self.y[b], &rc_blocks[b]))
                .collect();
            let Some(scalings) = scalings else {
                return Self::salvage(best.unwrap());
            };

            // reduced Hessian: quadratic term, scaled Gram of the matrix
            // coefficients, and the diagonal barrier of the bounds
            let nv = self.qp.nv;
            let mut h = self.qp.q.clone();
            for (b, sc) in scalings.iter().enumerate() {
                let mi = &self.blocks[b].mi;
                for a in 0..mi.len() {
                    for bb in a..mi.len() {
                        let g = sc.e[a].zip_fold(&sc.e[bb], 0.0, |acc, x, y| acc + x * y);
                        let (ia, ib) = (mi[a].0, mi[bb].0);
                        h[(ia, ib)] += g;
                        if ia != ib {
                            h[(ib, ia)] += g;
                        }
                    }
                }
            }
            for (k, &i) in self.nn.iter().enumerate() {
                h[(i, i)] += self.nu[k] / self.z[i];
            }
            debug_assert_eq!(h.nrows(), nv);

            let Some(kkt) = KktSolver::factor(&h, &self.qp.a_eq) else {
                return Self::salvage(best.unwrap());
            };

            let r_d = self.dual_residual();
            let r_p = if self.p > 0 {
                &self.qp.a_eq * &self.z - &self.qp.b_eq
            } else {
                DVector::zeros(0)
            };

            // predictor: plain Newton step toward complementarity zero
            let d_aff_targets: Vec<DMatrix<f64>> =
                scalings.iter().map(|sc| sc.v.apply(|l| -l)).collect();
            let mut rc_nn_aff = DVector::zeros(self.nn.len());
            for (k, &i) in self.nn.iter().enumerate() {
                rc_nn_aff[k] = -self.z[i] * self.nu[k];
            }
            let aff = self.newton_step(&kkt, &scalings, &rc_blocks, &r_d, &r_p, &d_aff_targets, &rc_nn_aff);
            let Some(aff) = aff else {
                return Self::salvage(best.unwrap());
            };
            let alpha_aff = self.max_step(&aff, &scalings).min(1.0);
            let mu_aff = self.complementarity_after(&aff, alpha_aff);
            let sigma = (mu_aff / mu_bar).powi(3).clamp(1e-8, 1.0);

            // corrector: recentered target with second-order terms
            let mut rc_nn = DVector::zeros(self.nn.len());
            for (k, &i) in self.nn.iter().enumerate() {
                rc_nn[k] = sigma * mu_bar - self.z[i] * self.nu[k] - aff.dz[i] * aff.dnu[k];
            }
            let d_targets: Vec<DMatrix<f64>> = scalings
                .iter()
                .enumerate()
                .map(|(b, sc)| {
                    let f_a = symmetrize(&(&sc.w_inv_half * &aff.ds[b] * &sc.w_inv_half));
                    let e_a = symmetrize(&(&sc.w_half * &aff.dy[b] * &sc.w_half));
                    let h_corr = symmetrize(&(&f_a * &e_a));
                    let mut c = sc.v.apply(|l| -l * l) - h_corr;
                    for i in 0..self.blocks[b].dim {
                        c[(i, i)] += sigma * mu_bar;
                    }
                    lyapunov_solve(&sc.v, &c)
                })
                .collect();
            let step = self.newton_step(&kkt, &scalings, &rc_blocks, &r_d, &r_p, &d_targets, &rc_nn);
            let Some(step) = step else {
                return Self::salvage(best.unwrap());
            };
            let alpha = (tau * self.max_step(&step, &scalings)).min(1.0);
            if alpha <= STALL_STEP {
                stalls += 1;
            } else {
                stalls = 0;
            }
            self.take_step(&step, alpha);
            if !self.z.iter().all(|v| v.is_finite()) {
                return Self::salvage(best.unwrap());
            }
        }

        Self::salvage(best.expect("at least one iterate recorded"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_sym(n: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed.max(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m = DMatrix::from_fn(n, n, |_, _| next());
        symmetrize(&m)
    }

    #[test]
    fn lyapunov_solve_inverts_the_scaled_product() {
        for seed in 1..6u64 {
            let n = 4;
            let base = random_sym(n, seed);
            // make V positive definite
            let v_mat = &base * &base + DMatrix::identity(n, n);
            let v = sym_eig(&v_mat).unwrap();
            let c = random_sym(n, seed + 100);
            let x = lyapunov_solve(&v, &c);
            let back = symmetrize(&(&v_mat * &x + &x * &v_mat)) * 0.5;
            assert!((back - c).amax() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn kkt_solver_matches_dense_inverse() {
        let h = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let kkt = KktSolver::factor(&h, &a).unwrap();
        let (dz, dmu) = kkt
            .solve(&DVector::from_row_slice(&[1.0, 0.0]), &DVector::from_row_slice(&[2.0]))
            .unwrap();
        // full system solved exactly: H dz + A' dmu = r1, A dz = r2
        let top = &h * &dz + a.transpose() * &dmu;
        assert_relative_eq!(top[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(top[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(dz[0] + dz[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn kkt_solver_handles_no_equalities() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 5.0]);
        let a = DMatrix::zeros(0, 2);
        let kkt = KktSolver::factor(&h, &a).unwrap();
        let (dz, _) = kkt
            .solve(&DVector::from_row_slice(&[2.0, 10.0]), &DVector::zeros(0))
            .unwrap();
        assert_relative_eq!(dz[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(dz[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sym_eig_apply_reconstructs_matrix_functions() {
        let m = random_sym(3, 7);
        let spd = &m * &m + DMatrix::identity(3, 3) * 2.0;
        let e = sym_eig(&spd).unwrap();
        let half = e.apply(f64::sqrt);
        assert!((&half * &half - &spd).amax() < 1e-10);
        let inv = e.apply(|l| 1.0 / l);
        assert!((&inv * &spd - DMatrix::identity(3, 3)).amax() < 1e-10);
    }
}
