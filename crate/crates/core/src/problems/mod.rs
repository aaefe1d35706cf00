//! Built-in benchmark problems.
//!
//! Six small nonlinear semidefinite programs exercising every solver path:
//! two infeasible problems (`isolated`, `nactive`), one feasible problem
//! whose constraint qualification fails at the solution
//! (`counterexample`), one classic degenerate scalar-constraint problem
//! lifted to diagonal matrix form (`standard`), and two feasible problems
//! whose linearized constraints are inconsistent at the starting points
//! (`rosen-suzuki`, `hock-schittkowski`).
//!
//! Scalar inequalities are carried as 1x1 blocks of the matrix constraint,
//! so a problem's cone is always a single block diagonal matrix.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::NsdpProblem;
use crate::symmat::{BlockSymMatrix, SymBlock};

mod expected;

pub use expected::{min_hard_passes, ExpectedClass, ExpectedOutcome, Hardness, TestCase};

pub const PROBLEM_NAMES: [&str; 6] = [
    "isolated",
    "nactive",
    "counterexample",
    "standard",
    "rosen-suzuki",
    "hock-schittkowski",
];

#[derive(Debug, Error, Clone)]
#[error("unknown problem '{0}'; available: isolated, nactive, counterexample, standard, rosen-suzuki, hock-schittkowski")]
pub struct UnknownProblem(pub String);

/// Looks a problem up by name.
pub fn get_problem(name: &str) -> Result<Arc<dyn NsdpProblem>, UnknownProblem> {
    match name {
        "isolated" => Ok(Arc::new(Isolated)),
        "nactive" => Ok(Arc::new(Nactive)),
        "counterexample" => Ok(Arc::new(Counterexample)),
        "standard" => Ok(Arc::new(Standard)),
        "rosen-suzuki" => Ok(Arc::new(RosenSuzuki)),
        "hock-schittkowski" => Ok(Arc::new(HockSchittkowski)),
        other => Err(UnknownProblem(other.to_string())),
    }
}

/// Every (problem, starting point) pair of the regression suite, with its
/// expected outcome, in canonical order.
pub fn list_cases() -> Vec<TestCase> {
    expected::list_cases()
}

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(v)
}

fn sb1(v: f64) -> SymBlock {
    SymBlock::from_fn(1, |_, _| v)
}

/// 2x2 block [[a, b], [b, c]].
fn sb2(a: f64, b: f64, c: f64) -> SymBlock {
    SymBlock::from_fn(2, |i, j| match (i, j) {
        (0, 0) => a,
        (0, 1) => b,
        (1, 1) => c,
        _ => unreachable!(),
    })
}

fn sb_diag(d: &[f64]) -> SymBlock {
    let d = d.to_vec();
    SymBlock::from_fn(d.len(), move |i, j| if i == j { d[i] } else { 0.0 })
}

/// Block from sparse upper-triangle entries.
fn sb_sparse(n: usize, entries: &[(usize, usize, f64)]) -> SymBlock {
    SymBlock::from_fn(n, |i, j| {
        entries
            .iter()
            .find(|&&(r, c, _)| r == i && c == j)
            .map(|&(_, _, v)| v)
            .unwrap_or(0.0)
    })
}

// ---------------------------------------------------------------------------
// isolated: min x1 + x2 under four 2x2 blocks; the feasible set is empty and
// the origin is an isolated stationary point of the constraint violation.
// ---------------------------------------------------------------------------

struct Isolated;

impl NsdpProblem for Isolated {
    fn name(&self) -> &str {
        "isolated"
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_eq(&self) -> usize {
        0
    }
    fn block_dims(&self) -> Vec<usize> {
        vec![2, 2, 2, 2]
    }
    fn objective(&self, x: &DVector<f64>) -> f64 {
        x[0] + x[1]
    }
    fn gradient(&self, _: &DVector<f64>) -> DVector<f64> {
        dv(&[1.0, 1.0])
    }
    fn equalities(&self, _: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }
    fn equality_jacobian(&self, _: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(0, 2)
    }
    fn constraint_matrix(&self, x: &DVector<f64>) -> BlockSymMatrix {
        // the last two blocks are identical in the published formulation
        // (both carry 1 + x1; a 1 - x1 counterpart would mirror the first
        // pair); kept exactly as published
        BlockSymMatrix::new(vec![
            sb2(-1.0, x[0], 1.0 + x[1]),
            sb2(-1.0, x[0], 1.0 - x[1]),
            sb2(-1.0, x[1], 1.0 + x[0]),
            sb2(-1.0, x[1], 1.0 + x[0]),
        ])
    }
    fn constraint_matrix_partial(&self, _: &DVector<f64>, i: usize) -> BlockSymMatrix {
        match i {
            0 => BlockSymMatrix::new(vec![
                sb2(0.0, 1.0, 0.0),
                sb2(0.0, 1.0, 0.0),
                sb2(0.0, 0.0, 1.0),
                sb2(0.0, 0.0, 1.0),
            ]),
            1 => BlockSymMatrix::new(vec![
                sb2(0.0, 0.0, 1.0),
                sb2(0.0, 0.0, -1.0),
                sb2(0.0, 1.0, 0.0),
                sb2(0.0, 1.0, 0.0),
            ]),
            _ => panic!("variable index out of range"),
        }
    }
    fn initial_points(&self) -> Vec<DVector<f64>> {
        vec![dv(&[3.0, 2.0])]
    }
}

// ---------------------------------------------------------------------------
// nactive: min x1; infeasible, with the scalar bound x1 - x2^2 <= 0 active
// at the stationary point of the violation.
// ---------------------------------------------------------------------------

struct Nactive;

impl NsdpProblem for Nactive {
    fn name(&self) -> &str {
        "nactive"
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_eq(&self) -> usize {
        0
    }
    fn block_dims(&self) -> Vec<usize> {
        vec![2, 2, 1]
    }
    fn objective(&self, x: &DVector<f64>) -> f64 {
        x[0]
    }
    fn gradient(&self, _: &DVector<f64>) -> DVector<f64> {
        dv(&[1.0, 0.0])
    }
    fn equalities(&self, _: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }
    fn equality_jacobian(&self, _: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(0, 2)
    }
    fn constraint_matrix(&self, x: &DVector<f64>) -> BlockSymMatrix {
        BlockSymMatrix::new(vec![
            sb2(-1.0, x[1], 0.5 * (x[0] + 1.0)),
            sb2(-1.0, x[1], -x[0]),
            sb1(x[0] - x[1] * x[1]),
        ])
    }
    fn constraint_matrix_partial(&self, x: &DVector<f64>, i: usize) -> BlockSymMatrix {
        match i {
            0 => BlockSymMatrix::new(vec![
                sb2(0.0, 0.0, 0.5),
                sb2(0.0, 0.0, -1.0),
                sb1(1.0),
            ]),
            1 => BlockSymMatrix::new(vec![
                sb2(0.0, 1.0, 0.0),
                sb2(0.0, 1.0, 0.0),
                sb1(-2.0 * x[1]),
            ]),
            _ => panic!("variable index out of range"),
        }
    }
    fn initial_points(&self) -> Vec<DVector<f64>> {
        vec![dv(&[-20.0, 10.0])]
    }
}

// ---------------------------------------------------------------------------
// counterexample: feasible, but the constraint qualification fails at the
// minimizer (2, 3, 0); classic counterexample to multiplier-based penalty
// updates.
// ---------------------------------------------------------------------------

struct Counterexample;

impl NsdpProblem for Counterexample {
    fn name(&self) -> &str {
        "counterexample"
    }
    fn dim(&self) -> usize {
        3
    }
    fn num_eq(&self) -> usize {
        2
    }
    fn block_dims(&self) -> Vec<usize> {
        vec![2]
    }
    fn objective(&self, x: &DVector<f64>) -> f64 {
        x[0]
    }
    fn gradient(&self, _: &DVector<f64>) -> DVector<f64> {
        dv(&[1.0, 0.0, 0.0])
    }
    fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        dv(&[x[0] * x[0] - x[1] - 1.0, x[0] - x[2] - 2.0])
    }
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 3, &[2.0 * x[0], -1.0, 0.0, 1.0, 0.0, -1.0])
    }
    fn constraint_matrix(&self, x: &DVector<f64>) -> BlockSymMatrix {
        BlockSymMatrix::new(vec![sb_diag(&[-x[1], -x[2]])])
    }
    fn constraint_matrix_partial(&self, _: &DVector<f64>, i: usize) -> BlockSymMatrix {
        match i {
            0 => BlockSymMatrix::zeros(&[2]),
            1 => BlockSymMatrix::new(vec![sb_diag(&[-1.0, 0.0])]),
            2 => BlockSymMatrix::new(vec![sb_diag(&[0.0, -1.0])]),
            _ => panic!("variable index out of range"),
        }
    }
    fn initial_points(&self) -> Vec<DVector<f64>> {
        vec![dv(&[-4.0, 1.0, 1.0])]
    }
}

// ---------------------------------------------------------------------------
// standard: min (x1-2)^2 + x2^2 with the cubic bound (1-x1)^3 >= x2 and
// x1, x2 >= 0 in diagonal form; the minimizer (1, 0) admits no multiplier.
// ---------------------------------------------------------------------------

struct Standard;

impl NsdpProblem for Standard {
    fn name(&self) -> &str {
        "standard"
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_eq(&self) -> usize {
        0
    }
    fn block_dims(&self) -> Vec<usize> {
        vec![3]
    }
    fn objective(&self, x: &DVector<f64>) -> f64 {
        (x[0] - 2.0).powi(2) + x[1] * x[1]
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        dv(&[2.0 * (x[0] - 2.0), 2.0 * x[1]])
    }
    fn equalities(&self, _: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }
    fn equality_jacobian(&self, _: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(0, 2)
    }
    fn constraint_matrix(&self, x: &DVector<f64>) -> BlockSymMatrix {
        BlockSymMatrix::new(vec![sb_diag(&[-(1.0 - x[0]).powi(3) + x[1], -x[0], -x[1]])])
    }
    fn constraint_matrix_partial(&self, x: &DVector<f64>, i: usize) -> BlockSymMatrix {
        match i {
            0 => BlockSymMatrix::new(vec![sb_diag(&[3.0 * (1.0 - x[0]).powi(2), -1.0, 0.0])]),
            1 => BlockSymMatrix::new(vec![sb_diag(&[1.0, 0.0, -1.0])]),
            _ => panic!("variable index out of range"),
        }
    }
    fn initial_points(&self) -> Vec<DVector<f64>> {
        vec![dv(&[-2.0, -2.0])]
    }
}

// ---------------------------------------------------------------------------
// rosen-suzuki: quartic-free quadratic objective, three quadratic equalities
// and one 4x4 matrix constraint; solution (0, 1, 2, -1) with objective -44.
// ---------------------------------------------------------------------------

struct RosenSuzuki;

impl NsdpProblem for RosenSuzuki {
    fn name(&self) -> &str {
        "rosen-suzuki"
    }
    fn dim(&self) -> usize {
        4
    }
    fn num_eq(&self) -> usize {
        3
    }
    fn block_dims(&self) -> Vec<usize> {
        vec![4]
    }
    fn objective(&self, x: &DVector<f64>) -> f64 {
        x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2] + x[3] * x[3] - 5.0 * x[0] - 5.0 * x[1]
            - 21.0 * x[2]
            + 7.0 * x[3]
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        dv(&[2.0 * x[0] - 5.0, 2.0 * x[1] - 5.0, 4.0 * x[2] - 21.0, 2.0 * x[3] + 7.0])
    }
    fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
        dv(&[
            a * a + b * b + c * c + d * d + a - b + c - d - 8.0,
            a * a + 2.0 * b * b + c * c + 2.0 * d * d - a - d - 9.0,
            2.0 * a * a + b * b + c * c - b - d - 5.0,
        ])
    }
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
        DMatrix::from_row_slice(
            3,
            4,
            &[
                2.0 * a + 1.0,
                2.0 * b - 1.0,
                2.0 * c + 1.0,
                2.0 * d - 1.0,
                2.0 * a - 1.0,
                4.0 * b,
                2.0 * c,
                4.0 * d - 1.0,
                4.0 * a,
                2.0 * b - 1.0,
                2.0 * c,
                -1.0,
            ],
        )
    }
    // The (2,2) entry is +x_1: with -x_1 there the point (0,1,2,-1) admits no
    // PSD multiplier (stationarity forces a negative weight on the active
    // eigenvector) and a feasible descent arc reaches f < -44.46, so the
    // advertised optimum would be neither stationary nor minimal.
    fn constraint_matrix(&self, x: &DVector<f64>) -> BlockSymMatrix {
        let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
        BlockSymMatrix::new(vec![sb_sparse(
            4,
            &[
                (0, 0, -b - c),
                (1, 1, 2.0 * d),
                (1, 2, -a),
                (2, 2, a),
                (3, 3, -b - c),
            ],
        )])
    }
    fn constraint_matrix_partial(&self, _: &DVector<f64>, i: usize) -> BlockSymMatrix {
        let entries: &[(usize, usize, f64)] = match i {
            0 => &[(1, 2, -1.0), (2, 2, 1.0)],
            1 => &[(0, 0, -1.0), (3, 3, -1.0)],
            2 => &[(0, 0, -1.0), (3, 3, -1.0)],
            3 => &[(1, 1, 2.0)],
            _ => panic!("variable index out of range"),
        };
        BlockSymMatrix::new(vec![sb_sparse(4, entries)])
    }
    fn initial_points(&self) -> Vec<DVector<f64>> {
        let mut pts = vec![dv(&[0.0; 4])];
        for c in [1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 100.0] {
            pts.push(dv(&[c; 4]));
            pts.push(dv(&[-c; 4]));
        }
        pts
    }
}

// ---------------------------------------------------------------------------
// hock-schittkowski: six variables, two equalities, one 4x4 positive
// semidefiniteness requirement (stored negated) and ten scalar bounds as
// 1x1 blocks: 1 <= x1..x4 <= 5 and x5, x6 >= 0.
// ---------------------------------------------------------------------------

struct HockSchittkowski;

impl NsdpProblem for HockSchittkowski {
    fn name(&self) -> &str {
        "hock-schittkowski"
    }
    fn dim(&self) -> usize {
        6
    }
    fn num_eq(&self) -> usize {
        2
    }
    fn block_dims(&self) -> Vec<usize> {
        vec![4, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]
    }
    fn objective(&self, x: &DVector<f64>) -> f64 {
        x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2]
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        dv(&[
            x[3] * (2.0 * x[0] + x[1] + x[2]),
            x[0] * x[3],
            x[0] * x[3] + 1.0,
            x[0] * (x[0] + x[1] + x[2]),
            0.0,
            0.0,
        ])
    }
    fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        dv(&[
            x[0] * x[1] * x[2] * x[3] - x[4] - 25.0,
            x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - x[5] - 40.0,
        ])
    }
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            2,
            6,
            &[
                x[1] * x[2] * x[3],
                x[0] * x[2] * x[3],
                x[0] * x[1] * x[3],
                x[0] * x[1] * x[2],
                -1.0,
                0.0,
                2.0 * x[0],
                2.0 * x[1],
                2.0 * x[2],
                2.0 * x[3],
                0.0,
                -1.0,
            ],
        )
    }
    fn constraint_matrix(&self, x: &DVector<f64>) -> BlockSymMatrix {
        // the 4x4 part must be positive semidefinite, so its negation goes
        // into the <= 0 cone
        let mut blocks = vec![sb_sparse(
            4,
            &[
                (0, 0, -x[0]),
                (0, 1, -x[1]),
                (1, 1, -x[3]),
                (1, 2, -(x[1] + x[2])),
                (2, 2, -x[3]),
                (2, 3, -x[2]),
                (3, 3, -x[0]),
            ],
        )];
        for i in 0..4 {
            blocks.push(sb1(1.0 - x[i]));
        }
        for i in 0..4 {
            blocks.push(sb1(x[i] - 5.0));
        }
        blocks.push(sb1(-x[4]));
        blocks.push(sb1(-x[5]));
        BlockSymMatrix::new(blocks)
    }
    fn constraint_matrix_partial(&self, _: &DVector<f64>, i: usize) -> BlockSymMatrix {
        let top: &[(usize, usize, f64)] = match i {
            0 => &[(0, 0, -1.0), (3, 3, -1.0)],
            1 => &[(0, 1, -1.0), (1, 2, -1.0)],
            2 => &[(1, 2, -1.0), (2, 3, -1.0)],
            3 => &[(1, 1, -1.0), (2, 2, -1.0)],
            4 | 5 => &[],
            _ => panic!("variable index out of range"),
        };
        let mut blocks = vec![sb_sparse(4, top)];
        for k in 0..4 {
            blocks.push(sb1(if i == k { -1.0 } else { 0.0 }));
        }
        for k in 0..4 {
            blocks.push(sb1(if i == k { 1.0 } else { 0.0 }));
        }
        blocks.push(sb1(if i == 4 { -1.0 } else { 0.0 }));
        blocks.push(sb1(if i == 5 { -1.0 } else { 0.0 }));
        BlockSymMatrix::new(blocks)
    }
    fn initial_points(&self) -> Vec<DVector<f64>> {
        (1..=5).map(|c| dv(&[c as f64; 6])).collect()
    }
}
