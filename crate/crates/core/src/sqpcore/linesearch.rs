//! Backtracking line search on the exact penalty function.

use nalgebra::DVector;

use super::config::SolverConfig;
use super::merit;
use crate::model::{evaluate, Evaluation, NsdpProblem};

#[derive(Debug)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub eval_next: Evaluation,
    /// Number of merit evaluations spent.
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineSearchError {
    /// No step in the geometric sequence down to the floor was acceptable.
    Floor { last_alpha: f64 },
    /// The merit value at the current point could not be formed.
    Numerical(String),
}

/// Finds the first step in `{1, gamma, gamma^2, ...}` whose exact-penalty
/// decrease beats the Armijo fraction of the predicted decrease
/// `dl_rho_next`. Trial points where evaluation fails or the merit is not
/// finite are treated as rejected and backtracked past.
pub fn line_search(
    p: &dyn NsdpProblem,
    e: &Evaluation,
    d: &DVector<f64>,
    rho_next: f64,
    dl_rho_next: f64,
    cfg: &SolverConfig,
) -> Result<LineSearchOutcome, LineSearchError> {
    let p0 = merit::penalty(e, rho_next).map_err(|err| LineSearchError::Numerical(err.to_string()))?;
    let mut alpha = 1.0;
    let mut trials = 0;
    while alpha >= cfg.alpha_floor {
        trials += 1;
        let x_trial = &e.x + d * alpha;
        if let Ok(e_trial) = evaluate(p, &x_trial) {
            if let Ok(p_trial) = merit::penalty(&e_trial, rho_next) {
                if p_trial.is_finite() && p_trial - p0 <= -cfg.eta * alpha * dl_rho_next {
                    return Ok(LineSearchOutcome { alpha, eval_next: e_trial, trials });
                }
            }
        }
        alpha *= cfg.gamma;
    }
    Err(LineSearchError::Floor { last_alpha: alpha / cfg.gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NsdpProblem;
    use crate::symmat::BlockSymMatrix;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    /// Unconstrained scalar problem defined by a closure pair.
    struct Scalar<F, G>(F, G);

    impl<F, G> NsdpProblem for Scalar<F, G>
    where
        F: Fn(f64) -> f64 + Send + Sync,
        G: Fn(f64) -> f64 + Send + Sync,
    {
        fn name(&self) -> &str {
            "scalar-test"
        }
        fn dim(&self) -> usize {
            1
        }
        fn num_eq(&self) -> usize {
            0
        }
        fn block_dims(&self) -> Vec<usize> {
            vec![]
        }
        fn objective(&self, x: &DVector<f64>) -> f64 {
            (self.0)(x[0])
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_element(1, (self.1)(x[0]))
        }
        fn equalities(&self, _: &DVector<f64>) -> DVector<f64> {
            DVector::zeros(0)
        }
        fn equality_jacobian(&self, _: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::zeros(0, 1)
        }
        fn constraint_matrix(&self, _: &DVector<f64>) -> BlockSymMatrix {
            BlockSymMatrix::zeros(&[])
        }
        fn constraint_matrix_partial(&self, _: &DVector<f64>, _: usize) -> BlockSymMatrix {
            BlockSymMatrix::zeros(&[])
        }
        fn initial_points(&self) -> Vec<DVector<f64>> {
            vec![DVector::zeros(1)]
        }
    }

    fn dv1(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn full_step_on_a_quadratic() {
        let p = Scalar(|x: f64| 0.5 * x * x, |x: f64| x);
        let e = evaluate(&p, &dv1(1.0)).unwrap();
        // Newton step d = -1, predicted decrease -g'd = 1
        let out = line_search(&p, &e, &dv1(-1.0), 1.0, 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.trials, 1);
        assert_relative_eq!(out.eval_next.x[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn quartic_forces_exactly_one_backtrack() {
        // f(x) = x^4 - x from x = 0 with d = 1: the full step gains
        // nothing (f(1) = f(0) = 0), the second trial 0.6 is accepted
        let p = Scalar(|x: f64| x.powi(4) - x, |x: f64| 4.0 * x.powi(3) - 1.0);
        let e = evaluate(&p, &dv1(0.0)).unwrap();
        let dl = 1.0; // -g'd at x = 0
        let out = line_search(&p, &e, &dv1(1.0), 1.0, dl, &SolverConfig::default()).unwrap();
        assert_relative_eq!(out.alpha, 0.6, max_relative = 1e-15);
        assert_eq!(out.trials, 2);
    }

    #[test]
    fn ascent_direction_hits_the_floor() {
        let p = Scalar(|x: f64| x, |_: f64| 1.0);
        let e = evaluate(&p, &dv1(0.0)).unwrap();
        // deliberately inconsistent predicted decrease
        let err = line_search(&p, &e, &dv1(1.0), 1.0, 1.0, &SolverConfig::default()).unwrap_err();
        match err {
            // the last attempted step sits just above the floor
            LineSearchError::Floor { last_alpha } => {
                assert!(last_alpha >= 1e-16 && last_alpha < 1e-16 / 0.6, "{last_alpha:e}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_finite_trials_are_backtracked_past() {
        // objective blows up beyond x = 0.5; the search skips those trials
        let p = Scalar(
            |x: f64| if x > 0.5 { f64::NAN } else { -x },
            |_: f64| -1.0,
        );
        let e = evaluate(&p, &dv1(0.0)).unwrap();
        let out = line_search(&p, &e, &dv1(1.0), 1.0, 1.0, &SolverConfig::default()).unwrap();
        assert_relative_eq!(out.alpha, 0.36, max_relative = 1e-12);
        assert_eq!(out.trials, 3);
    }

    #[test]
    fn accepted_steps_satisfy_the_armijo_inequality_on_recheck() {
        let p = Scalar(|x: f64| (x - 3.0).powi(2), |x: f64| 2.0 * (x - 3.0));
        let cfg = SolverConfig::default();
        for (x0, d) in [(0.0, 2.0), (1.0, 5.0), (10.0, -6.5)] {
            let e = evaluate(&p, &dv1(x0)).unwrap();
            let dl = -e.grad[0] * d;
            if dl <= 0.0 {
                continue;
            }
            let out = line_search(&p, &e, &dv1(d), 1.0, dl, &cfg).unwrap();
            let p0 = merit::penalty(&e, 1.0).unwrap();
            let p1 = merit::penalty(&out.eval_next, 1.0).unwrap();
            assert!(p1 - p0 <= -cfg.eta * out.alpha * dl + 1e-15);
        }
    }
}
