//! Post-hoc audit of a finished run.
//!
//! Every inequality the method guarantees is recomputed here from the
//! recorded iterates and fresh problem evaluations, not from the solver's
//! own intermediate values. An empty finding list means the run respected
//! the full contract; each finding names the iteration and the violated
//! inequality with its measured slack.

use nalgebra::DVector;

use super::config::SolverConfig;
use super::merit;
use super::solver::{shifted_penalty_diagnostic, SolveReport};
use crate::conesolve::ConeStatus;
use crate::model::{self, NsdpProblem};

/// Per-link slack of the descent chain.
const CHAIN_SLACK: f64 = 1e-7;
/// Multiplier box and trace tolerance.
const BOX_TOL: f64 = 1e-7;
/// How far below zero a multiplier eigenvalue may sit.
const PSD_TOL: f64 = 1e-8;
/// Shifted-penalty monotonicity slack.
const PHI_SLACK: f64 = 1e-8;
/// Residual bound certified by an optimal subsolve.
const CERT_TOL: f64 = 1e-7;

pub fn check_run(p: &dyn NsdpProblem, report: &SolveReport, cfg: &SolverConfig) -> Vec<String> {
    let mut findings = Vec::new();
    let eps = cfg.eps;
    let (b_lo, b_hi) = cfg.b_eig_bounds;

    for (idx, rec) in report.records.iter().enumerate() {
        let k = rec.k;
        let x = DVector::from_row_slice(&rec.x);
        let d = DVector::from_row_slice(&rec.d);
        let d_fea = DVector::from_row_slice(&rec.d_fea);
        let e = match model::evaluate(p, &x) {
            Ok(e) => e,
            Err(err) => {
                findings.push(format!("k={k} audit: stored iterate fails to evaluate: {err}"));
                continue;
            }
        };
        let quantities = (|| -> Result<_, crate::symmat::SymMatError> {
            let v = merit::violation(&e)?;
            let lv_d = merit::linearized_violation(&e, &d)?;
            let lv_dfea = merit::linearized_violation(&e, &d_fea)?;
            Ok((v, lv_d, lv_dfea))
        })();
        let (v, lv_d, lv_dfea) = match quantities {
            Ok(q) => q,
            Err(err) => {
                findings.push(format!("k={k} audit: eigensolve failed on stored iterate: {err}"));
                continue;
            }
        };
        let dl_v = v - lv_d;
        let dl_v_fea = v - lv_dfea;
        let dl_f = -e.grad.dot(&d);
        let dl_rho_next = rec.rho_next * dl_f + dl_v;

        // descent chain, each link with its own slack
        if dl_rho_next < eps * dl_v - CHAIN_SLACK {
            findings.push(format!(
                "k={k} chain: penalty improvement {dl_rho_next:e} below eps * violation improvement {:e}",
                eps * dl_v
            ));
        }
        if eps * dl_v < eps * dl_v_fea - CHAIN_SLACK {
            findings.push(format!(
                "k={k} chain: direction improves violation by {dl_v:e}, less than the feasibility step's {dl_v_fea:e}"
            ));
        }
        if eps * dl_v_fea < -CHAIN_SLACK {
            findings.push(format!(
                "k={k} chain: feasibility step worsens the linearized violation by {:e}",
                -dl_v_fea
            ));
        }

        // the direction may not be less feasible than the relaxation allows
        if lv_d > rec.lv_dfea + CHAIN_SLACK {
            findings.push(format!(
                "k={k} ordering: linearized violation at d {lv_d:e} exceeds the relaxation cost {:e}",
                rec.lv_dfea
            ));
        }

        // penalty weight positive, never increased, and stitched across rows
        if !(rec.rho > 0.0) || !(rec.rho_next > 0.0) {
            findings.push(format!("k={k} weight: nonpositive penalty weight {:e}", rec.rho_next));
        }
        if rec.rho_next > rec.rho {
            findings.push(format!(
                "k={k} weight: update raised the weight {:e} -> {:e}",
                rec.rho, rec.rho_next
            ));
        }
        if let Some(next) = report.records.get(idx + 1) {
            if next.rho != rec.rho_next {
                findings.push(format!(
                    "k={k} weight: row k+1 starts from {:e}, not this row's updated {:e}",
                    next.rho, rec.rho_next
                ));
            }
        }

        // multiplier boxes from the feasibility step's dual
        for (i, &m) in rec.mu_fea.iter().enumerate() {
            if m.abs() > 1.0 + BOX_TOL {
                findings.push(format!("k={k} box: equality multiplier {i} = {m:e} outside [-1, 1]"));
            }
        }
        if rec.trace_y_fea > 1.0 + BOX_TOL {
            findings.push(format!("k={k} box: matrix multiplier trace {:e} above 1", rec.trace_y_fea));
        }
        if rec.lmin_y_fea < -PSD_TOL {
            findings.push(format!(
                "k={k} box: feasibility matrix multiplier has eigenvalue {:e}",
                rec.lmin_y_fea
            ));
        }
        if rec.lmin_y_dir < -PSD_TOL {
            findings.push(format!(
                "k={k} box: direction matrix multiplier has eigenvalue {:e}",
                rec.lmin_y_dir
            ));
        }

        // model Hessian spectrum inside the configured clip range
        if rec.b_lmin < b_lo * (1.0 - 1e-12) || rec.b_lmax > b_hi * (1.0 + 1e-12) {
            findings.push(format!(
                "k={k} curvature bounds: spectrum [{:e}, {:e}] escapes [{b_lo:e}, {b_hi:e}]",
                rec.b_lmin, rec.b_lmax
            ));
        }

        // accepted steps must still satisfy the acceptance test
        if let Some(alpha) = rec.alpha {
            let armijo = (|| -> Result<f64, String> {
                let p0 = merit::penalty(&e, rec.rho_next).map_err(|e| e.to_string())?;
                let x_next = &x + &d * alpha;
                let e_next = model::evaluate(p, &x_next).map_err(|e| e.to_string())?;
                let p1 = merit::penalty(&e_next, rec.rho_next).map_err(|e| e.to_string())?;
                Ok((p1 - p0) - (-cfg.eta * alpha * dl_rho_next))
            })();
            match armijo {
                Ok(excess) => {
                    if excess > 1e-12 * (1.0 + v.abs() + e.f.abs()) {
                        findings.push(format!(
                            "k={k} armijo: accepted step fails the test by {excess:e} at alpha = {alpha:e}"
                        ));
                    }
                }
                Err(err) => {
                    findings.push(format!("k={k} armijo: accepted step cannot be re-evaluated: {err}"));
                }
            }
        }

        // an optimal subsolve certifies a small residual
        if rec.fea_status == ConeStatus::Optimal && rec.fea_kkt > CERT_TOL {
            findings.push(format!(
                "k={k} certificate: feasibility subsolve claims optimality at residual {:e}",
                rec.fea_kkt
            ));
        }
        if rec.dir_status == ConeStatus::Optimal && rec.dir_kkt > CERT_TOL {
            findings.push(format!(
                "k={k} certificate: direction subsolve claims optimality at residual {:e}",
                rec.dir_kkt
            ));
        }
    }

    let phi = shifted_penalty_diagnostic(report);
    for (i, w) in phi.windows(2).enumerate() {
        if w[1] > w[0] + PHI_SLACK {
            findings.push(format!(
                "phi: shifted penalty rises {:e} -> {:e} between rows {i} and {}",
                w[0],
                w[1],
                i + 1
            ));
        }
    }

    findings
}
