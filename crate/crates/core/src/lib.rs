//! Solver for nonlinear semidefinite programs that makes no feasibility
//! assumption: minimize `f(x)` subject to equality constraints `h(x) = 0`
//! and a block-diagonal matrix inequality `G(x) <= 0`. When the problem is
//! infeasible the method still converges, to a point minimizing the
//! constraint violation, and says so in its exit classification.
//!
//! The pieces:
//! - [`symmat`]: block-diagonal symmetric matrices with spectral helpers;
//! - [`model`]: the problem trait and first-derivative bookkeeping;
//! - [`conesolve`]: an interior-point method for the convex quadratic
//!   subproblems over nonnegative and semidefinite cones;
//! - [`sqpcore`]: the outer loop, penalty update, line search, curvature
//!   model, and run auditing;
//! - [`problems`]: built-in test problems with graded expected outcomes.

pub mod conesolve;
pub mod model;
pub mod problems;
pub mod sqpcore;
pub mod symmat;

pub use model::{evaluate, Evaluation, NsdpProblem};
pub use sqpcore::{solve, SolveReport, SolverConfig, TerminationClass};
