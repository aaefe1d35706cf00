//! Computable certificates of stationarity.
//!
//! `residual_fea` certifies that a point is first-order stationary for the
//! constraint violation itself (the relevant notion when the problem is
//! infeasible); `residual_opt` certifies a scaled KKT point of the
//! original problem. Both consume the multipliers returned by the
//! subproblems.

use nalgebra::DVector;

use crate::model::{self, Evaluation};
use crate::symmat::{self, BlockSymMatrix, SymMatError};

/// Gradient in `x` of `rho * f + mu' h + <Y, G>`.
pub fn grad_fj(e: &Evaluation, rho: f64, mu: &DVector<f64>, y: &BlockSymMatrix) -> DVector<f64> {
    let mut g = &e.grad * rho;
    if e.eq.len() > 0 {
        g += e.eq_jac.transpose() * mu;
    }
    g + model::dg_adjoint(e, y)
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Frobenius norm of the blockwise product `Y * M` (not symmetric in
/// general, so it is formed densely per block).
fn product_norm(y: &BlockSymMatrix, m: &BlockSymMatrix) -> f64 {
    let mut sq = 0.0;
    for (yb, mb) in y.blocks().iter().zip(m.blocks()) {
        let prod = yb.to_dense() * mb.to_dense();
        sq += prod.iter().map(|v| v * v).sum::<f64>();
    }
    sq.sqrt()
}

/// Stationarity measure for violation minimization: the five-term sum
///
/// ```txt
/// |Dh' mu + DG* Y|_inf
///   + |(1 - mu) o [h]_+|_inf + |(1 + mu) o [h]_-|_inf
///   + |1 - tr Y| * [lambda_max G]_+
///   + |Y (G - [lambda_max G]_+ I)|_F
/// ```
pub fn residual_fea(
    e: &Evaluation,
    mu: &DVector<f64>,
    y: &BlockSymMatrix,
) -> Result<f64, SymMatError> {
    let stat = inf_norm(&grad_fj(e, 0.0, mu, y));
    let mut pos = 0.0_f64;
    let mut neg = 0.0_f64;
    for i in 0..e.eq.len() {
        let h = e.eq[i];
        pos = pos.max(((1.0 - mu[i]) * h.max(0.0)).abs());
        neg = neg.max(((1.0 + mu[i]) * h.min(0.0)).abs());
    }
    let lam = symmat::lambda_max(&e.mat)?.max(0.0);
    let trace_term = (1.0 - y.trace()).abs() * lam;
    let compl = product_norm(y, &e.mat.shift_diag(-lam));
    Ok(stat + pos + neg + trace_term + compl)
}

/// KKT measure of the original problem at penalty weight `rho`:
/// `|rho g + Dh' mu + DG* Y|_inf + |Y G|_F`.
pub fn residual_opt(
    e: &Evaluation,
    rho: f64,
    mu: &DVector<f64>,
    y: &BlockSymMatrix,
) -> Result<f64, SymMatError> {
    Ok(inf_norm(&grad_fj(e, rho, mu, y)) + product_norm(y, &e.mat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate;
    use crate::problems::get_problem;
    use crate::symmat::SymBlock;
    use approx::assert_relative_eq;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn zero_multipliers_at_feasible_point() {
        let p = get_problem("rosen-suzuki").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[0.0, 1.0, 2.0, -1.0])).unwrap();
        let mu = DVector::zeros(3);
        let y = BlockSymMatrix::zeros(&[4]);
        assert!(residual_fea(&e, &mu, &y).unwrap() < 1e-10);
        // with rho = 0 the optimality residual also collapses
        assert!(residual_opt(&e, 0.0, &mu, &y).unwrap() < 1e-12);
    }

    #[test]
    fn hand_built_stationarity_certificate_for_infeasible_minimizer() {
        // at the origin, every block of the two-variable infeasible
        // benchmark is diag(-1, 1); weighting the active eigenvector of
        // the first two blocks by 1/2 each kills all five terms
        let p = get_problem("isolated").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[0.0, 0.0])).unwrap();
        let half = SymBlock::from_fn(2, |i, j| if i == 1 && j == 1 { 0.5 } else { 0.0 });
        let y = BlockSymMatrix::new(vec![
            half.clone(),
            half,
            SymBlock::zeros(2),
            SymBlock::zeros(2),
        ]);
        let r = residual_fea(&e, &DVector::zeros(0), &y).unwrap();
        assert!(r < 1e-14, "residual {r:e}");
    }

    #[test]
    fn perturbed_multiplier_raises_the_residual() {
        let p = get_problem("isolated").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[0.0, 0.0])).unwrap();
        let mk = |w1: f64, w2: f64| {
            BlockSymMatrix::from_fn(&[2, 2, 2, 2], move |b, i, j| {
                if i == 1 && j == 1 && b == 0 {
                    w1
                } else if i == 1 && j == 1 && b == 1 {
                    w2
                } else {
                    0.0
                }
            })
        };
        let exact = residual_fea(&e, &DVector::zeros(0), &mk(0.5, 0.5)).unwrap();
        let off = residual_fea(&e, &DVector::zeros(0), &mk(0.6, 0.5)).unwrap();
        assert!(exact < 1e-14);
        assert!(off > 0.09, "perturbation should register, got {off:e}");
    }

    #[test]
    fn stationarity_term_scales_linearly() {
        let p = get_problem("counterexample").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[-4.0, 1.0, 1.0])).unwrap();
        let mu = dv(&[0.3, -0.7]);
        let y = BlockSymMatrix::from_fn(&[2], |_, i, j| if i == j { 0.2 } else { 0.1 });
        let c = 3.5;
        let g1 = grad_fj(&e, 1.0, &mu, &y);
        let g2 = grad_fj(&e, c, &(&mu * c), &y.scale(c));
        assert_relative_eq!((&g1 * c - &g2).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn five_term_sum_uses_equality_sign_split() {
        // one positive and one negative equality residual, multipliers at
        // the box edges: the corresponding terms vanish one at a time
        let p = get_problem("counterexample").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[-4.0, 1.0, 1.0])).unwrap();
        // h = (16 - 1 - 1, -4 - 1 - 2) = (14, -7)
        assert_relative_eq!(e.eq[0], 14.0, max_relative = 1e-14);
        assert_relative_eq!(e.eq[1], -7.0, max_relative = 1e-14);
        let y = BlockSymMatrix::zeros(&[2]);
        let base = residual_fea(&e, &dv(&[0.0, 0.0]), &y).unwrap();
        let at_edges = residual_fea(&e, &dv(&[1.0, -1.0]), &y).unwrap();
        // at mu = (1, -1) both sign-split terms vanish; only stationarity
        // of Dh' mu remains
        let stat_only = inf_norm(&grad_fj(&e, 0.0, &dv(&[1.0, -1.0]), &y));
        assert_relative_eq!(at_edges, stat_only, max_relative = 1e-14);
        assert!(base > at_edges || base > 0.0);
    }
}
