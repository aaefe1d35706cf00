//! The two-stage penalty weight update.
//!
//! Stage one shrinks the weight when either subproblem's multipliers are
//! large relative to it, which signals that the objective term is drowning
//! out feasibility. Stage two shrinks it further, using the curvature
//! quotient `zeta`, whenever the direction's linearized penalty decrease
//! fails to dominate a fixed fraction of its violation decrease. The
//! result is positive, never larger than the input, and guarantees the
//! descent inequality the line search relies on.

use nalgebra::{DMatrix, DVector};

use super::config::SolverConfig;

#[derive(Debug, Clone, Copy)]
pub struct PenaltyUpdate {
    pub rho_next: f64,
    /// The curvature quotient, when stage two fired.
    pub zeta: Option<f64>,
}

/// `box_fea` and `box_dir` are `|mu|_inf + tr(Y)` for the feasibility and
/// direction multipliers; `dl_f = -g'd` and `dl_v` are the linearized
/// improvements of the direction `d` under curvature matrix `b`.
pub fn update_penalty(
    rho: f64,
    box_fea: f64,
    box_dir: f64,
    dl_f: f64,
    dl_v: f64,
    d: &DVector<f64>,
    b: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<PenaltyUpdate, String> {
    debug_assert!(rho > 0.0);
    let eps = cfg.eps;
    let mut rho1 = rho;
    if rho * box_fea > 1.0 || rho * box_dir > 1.0 {
        rho1 = (cfg.delta * rho).min((1.0 - eps) / (box_fea + box_dir));
    }
    let dl_rho1 = rho1 * dl_f + dl_v;
    if dl_rho1 >= eps * dl_v {
        return Ok(PenaltyUpdate { rho_next: rho1, zeta: None });
    }
    // the quotient's denominator g'd + d'Bd/2 is provably positive in this
    // branch; a nonpositive value means the model state is inconsistent
    let denom = -dl_f + 0.5 * (b * d).dot(d);
    if !(denom > 0.0) {
        return Err(format!(
            "penalty stage-two denominator not positive: g'd + d'Bd/2 = {denom:e}"
        ));
    }
    let zeta = (1.0 - eps) * dl_v / denom;
    let rho_next = (cfg.delta * rho1).min(zeta);
    if !(rho_next > 0.0) {
        return Err(format!("penalty weight collapsed to {rho_next:e} (zeta = {zeta:e})"));
    }
    Ok(PenaltyUpdate { rho_next, zeta: Some(zeta) })
}
