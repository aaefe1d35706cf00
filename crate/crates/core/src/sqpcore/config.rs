use serde::Serialize;

use crate::conesolve::SubsolverConfig;

/// Tunable parameters of the outer loop. Defaults follow the reference
/// experiments for this method.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Margin in the penalty-weight tests and in the descent guarantee.
    pub eps: f64,
    /// Geometric shrink factor applied to the penalty weight.
    pub delta: f64,
    /// Armijo slope fraction.
    pub eta: f64,
    /// Backtracking ratio of the line search.
    pub gamma: f64,
    /// Initial penalty weight on the objective.
    pub rho0: f64,
    /// Outer iteration cap.
    pub nmax: usize,
    /// Terminate once the direction norm falls below this.
    pub tol_step: f64,
    /// Violation threshold separating feasible from infeasible outcomes.
    pub tol_viol: f64,
    /// The feasibility phase damps its step with `bfea_scale * I`.
    pub bfea_scale: f64,
    /// Lower bound on the curvature scale `max(bfgs_floor, rho)`.
    pub bfgs_floor: f64,
    /// Eigenvalue clip range keeping the model Hessian uniformly positive
    /// definite and bounded.
    pub b_eig_bounds: (f64, f64),
    /// Line search aborts below this step size.
    pub alpha_floor: f64,
    /// Final penalty weights below this are classified as collapsed.
    pub rho_floor_class: f64,
    pub subsolver: SubsolverConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: 1e-4,
            delta: 0.9,
            eta: 1e-4,
            gamma: 0.6,
            rho0: 1.0,
            nmax: 500,
            tol_step: 1e-4,
            tol_viol: 1e-4,
            bfea_scale: 1e-3,
            bfgs_floor: 1e-5,
            b_eig_bounds: (1e-8, 1e8),
            alpha_floor: 1e-16,
            rho_floor_class: 1e-8,
            subsolver: SubsolverConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        let unit = [
            ("eps", self.eps),
            ("delta", self.delta),
            ("eta", self.eta),
            ("gamma", self.gamma),
        ];
        for (name, value) in unit {
            if !(value > 0.0 && value < 1.0) {
                return Err(format!("{name} must lie strictly between 0 and 1, got {value}"));
            }
        }
        let positive = [
            ("rho0", self.rho0),
            ("tol_step", self.tol_step),
            ("tol_viol", self.tol_viol),
            ("bfea_scale", self.bfea_scale),
            ("bfgs_floor", self.bfgs_floor),
            ("alpha_floor", self.alpha_floor),
            ("rho_floor_class", self.rho_floor_class),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(format!("{name} must be positive and finite, got {value}"));
            }
        }
        let (b1, b2) = self.b_eig_bounds;
        if !(b1 > 0.0 && b2 > b1) {
            return Err(format!("b_eig_bounds must satisfy 0 < b1 < b2, got ({b1}, {b2})"));
        }
        if self.nmax == 0 {
            return Err("nmax must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let mut c = SolverConfig::default();
        c.gamma = 1.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.rho0 = 0.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.b_eig_bounds = (1e-8, 1e-9);
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.nmax = 0;
        assert!(c.validate().is_err());
    }
}
