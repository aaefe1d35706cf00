//! Constraint violation, the exact penalty function, and its linearized
//! models.

use nalgebra::DVector;

use crate::model::{self, Evaluation};
use crate::symmat::{self, SymMatError};

/// `v(x) = |h(x)|_1 + [lambda_max(G(x))]_+`.
pub fn violation(e: &Evaluation) -> Result<f64, SymMatError> {
    let h1: f64 = e.eq.iter().map(|v| v.abs()).sum();
    let lam = symmat::lambda_max(&e.mat)?;
    Ok(h1 + lam.max(0.0))
}

/// Exact penalty `rho * f(x) + v(x)`.
pub fn penalty(e: &Evaluation, rho: f64) -> Result<f64, SymMatError> {
    Ok(rho * e.f + violation(e)?)
}

/// Violation of the constraint linearizations at step `d`:
/// `|h + Dh d|_1 + [lambda_max(G + DG d)]_+`. Convex in `d` and equal to
/// `violation` at `d = 0`.
pub fn linearized_violation(e: &Evaluation, d: &DVector<f64>) -> Result<f64, SymMatError> {
    let mut h1 = 0.0;
    if e.eq.len() > 0 {
        let hd = &e.eq + &e.eq_jac * d;
        h1 = hd.iter().map(|v| v.abs()).sum();
    }
    let gd = model::dg_apply(e, d);
    let m = e.mat.add_scaled(1.0, &gd);
    Ok(h1 + symmat::lambda_max(&m)?.max(0.0))
}

/// Linearized improvements of one step: in the objective, in the
/// violation, and in the penalty at weight `rho`.
#[derive(Debug, Clone, Copy)]
pub struct DeltaL {
    /// `rho * dl_f + dl_v`.
    pub dl_rho: f64,
    /// `v - l^v(d)`, nonnegative for subproblem solutions.
    pub dl_v: f64,
    /// `-g' d`.
    pub dl_f: f64,
}

pub fn delta_l(e: &Evaluation, d: &DVector<f64>, rho: f64) -> Result<DeltaL, SymMatError> {
    let dl_f = -e.grad.dot(d);
    let dl_v = violation(e)? - linearized_violation(e, d)?;
    Ok(DeltaL { dl_rho: rho * dl_f + dl_v, dl_v, dl_f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate;
    use crate::problems::get_problem;
    use approx::assert_relative_eq;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn violation_at_reference_points() {
        let p = get_problem("isolated").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[3.0, 2.0])).unwrap();
        let v = violation(&e).unwrap();
        assert_relative_eq!(v, (3.0 + 41.0_f64.sqrt()) / 2.0, max_relative = 1e-12);
        assert!((v - 4.7016).abs() < 1e-4);

        let p = get_problem("counterexample").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[-4.0, 1.0, 1.0])).unwrap();
        assert_relative_eq!(violation(&e).unwrap(), 21.0, max_relative = 1e-12);

        let p = get_problem("rosen-suzuki").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[0.0, 1.0, 2.0, -1.0])).unwrap();
        assert!(violation(&e).unwrap() < 1e-10);
    }

    #[test]
    fn penalty_combines_objective_and_violation() {
        let p = get_problem("isolated").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[3.0, 2.0])).unwrap();
        let expected = 5.0 + (3.0 + 41.0_f64.sqrt()) / 2.0;
        assert_relative_eq!(penalty(&e, 1.0).unwrap(), expected, max_relative = 1e-12);
        assert!((penalty(&e, 1.0).unwrap() - 9.7016).abs() < 1e-4);
        // at a feasible point only the objective term remains
        let p = get_problem("rosen-suzuki").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[0.0, 1.0, 2.0, -1.0])).unwrap();
        assert_relative_eq!(penalty(&e, 0.5).unwrap(), 0.5 * e.f, epsilon = 1e-10);
    }

    #[test]
    fn linearized_violation_at_zero_step_is_the_violation() {
        for name in crate::problems::PROBLEM_NAMES {
            let p = get_problem(name).unwrap();
            for x0 in p.initial_points() {
                let e = evaluate(p.as_ref(), &x0).unwrap();
                let v = violation(&e).unwrap();
                let l0 = linearized_violation(&e, &DVector::zeros(p.dim())).unwrap();
                assert!((v - l0).abs() <= 1e-13 * (1.0 + v.abs()), "{name}");
            }
        }
    }

    #[test]
    fn linearized_violation_reference_step() {
        // two-variable infeasible benchmark: the step to the origin
        // flattens every block to eigenvalue 1
        let p = get_problem("isolated").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[3.0, 2.0])).unwrap();
        let lv = linearized_violation(&e, &dv(&[-3.0, -2.0])).unwrap();
        assert_relative_eq!(lv, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn linearization_exact_for_affine_constraints() {
        let p = get_problem("isolated").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[3.0, 2.0])).unwrap();
        for d in [dv(&[0.5, -1.0]), dv(&[-2.0, 4.0]), dv(&[1e-3, 1e-2])] {
            let lv = linearized_violation(&e, &d).unwrap();
            let shifted = evaluate(p.as_ref(), &(&e.x + &d)).unwrap();
            let v_exact = violation(&shifted).unwrap();
            assert_relative_eq!(lv, v_exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn linearized_violation_is_convex_along_segments() {
        let p = get_problem("hock-schittkowski").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[2.0; 6])).unwrap();
        let d1 = dv(&[1.0, -0.5, 0.3, 0.0, 2.0, -1.0]);
        let d2 = dv(&[-1.0, 0.8, 0.0, 1.5, -0.2, 0.4]);
        let l1 = linearized_violation(&e, &d1).unwrap();
        let l2 = linearized_violation(&e, &d2).unwrap();
        for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let mid = &d1 * theta + &d2 * (1.0 - theta);
            let lm = linearized_violation(&e, &mid).unwrap();
            assert!(lm <= theta * l1 + (1.0 - theta) * l2 + 1e-10);
        }
    }

    #[test]
    fn delta_l_zero_step_and_rho_linearity() {
        let p = get_problem("counterexample").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[-4.0, 1.0, 1.0])).unwrap();
        let z = delta_l(&e, &DVector::zeros(3), 1.0).unwrap();
        assert!(z.dl_rho.abs() < 1e-12 && z.dl_v.abs() < 1e-12 && z.dl_f.abs() < 1e-12);

        let d = dv(&[1.0, -2.0, 0.5]);
        let a = delta_l(&e, &d, 0.3).unwrap();
        let b = delta_l(&e, &d, 0.7).unwrap();
        assert_relative_eq!(a.dl_v, b.dl_v, max_relative = 1e-14);
        assert_relative_eq!(a.dl_f, b.dl_f, max_relative = 1e-14);
        assert_relative_eq!(a.dl_rho - b.dl_rho, (0.3 - 0.7) * a.dl_f, max_relative = 1e-10);
    }

    #[test]
    fn delta_l_matches_formula_recomputation() {
        let p = get_problem("isolated").unwrap();
        let e = evaluate(p.as_ref(), &dv(&[3.0, 2.0])).unwrap();
        let d = dv(&[-3.0, -2.0]);
        let out = delta_l(&e, &d, 1.0).unwrap();
        let v = violation(&e).unwrap();
        assert_relative_eq!(out.dl_f, 5.0, max_relative = 1e-14); // -g'd = 3+2
        assert_relative_eq!(out.dl_v, v - 1.0, max_relative = 1e-12);
        assert_relative_eq!(out.dl_rho, 5.0 + v - 1.0, max_relative = 1e-12);
    }
}
