//! The outer SQP loop and its supporting machinery.
//!
//! Each iteration solves two conic subproblems: a feasibility phase that
//! finds the smallest relaxation `(r, s, t)` making the linearized
//! constraints attainable, and a direction phase that minimizes a penalized
//! quadratic model over steps honoring that relaxation. The penalty weight
//! on the objective shrinks whenever the subproblem multipliers reveal it
//! is too large, a backtracking line search on the exact penalty function
//! accepts a step, and a damped quasi-Newton update refreshes the model
//! curvature. Runs terminate when the direction norm falls under a
//! threshold and are classified by where the violation and the penalty
//! weight ended up.

pub mod bfgs;
pub mod config;
pub mod invariants;
pub mod linesearch;
pub mod merit;
pub mod penalty_update;
pub mod residuals;
pub mod solver;

pub use config::SolverConfig;
pub use solver::{
    solve, FailureKind, FinalState, IterationRecord, SolveFailure, SolveReport, TerminationClass,
};
