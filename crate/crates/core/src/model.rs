//! Problem abstraction: smooth objective, equality constraints, and a block
//! symmetric matrix constraint, together with first derivatives.
//!
//! A problem instance is
//!
//! ```txt
//!     minimize  f(x)
//!     s.t.      h(x) = 0            (l equations)
//!               G(x) <= 0           (negative semidefinite, block diagonal)
//! ```
//!
//! All evaluations at a point are collected once into an [`Evaluation`] so
//! the solver never recomputes a quantity at the same point, and so that
//! non-finite values are caught at a single choke point.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::symmat::BlockSymMatrix;

#[derive(Debug, Error, Clone)]
#[error("{quantity} evaluated to a non-finite value at x = {x:?}")]
pub struct EvalError {
    pub quantity: &'static str,
    pub x: Vec<f64>,
}

/// A nonlinear semidefinite program with analytic first derivatives.
///
/// Implementations must be deterministic: repeated calls with the same `x`
/// must return identical values.
pub trait NsdpProblem: Send + Sync {
    fn name(&self) -> &str;

    /// Number of decision variables.
    fn dim(&self) -> usize;

    /// Number of equality constraints (may be zero).
    fn num_eq(&self) -> usize;

    /// Block orders of the matrix constraint.
    fn block_dims(&self) -> Vec<usize>;

    fn objective(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Equality residuals; length `num_eq()`.
    fn equalities(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Jacobian of the equalities, `num_eq() x dim()`.
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Value of the matrix constraint.
    fn constraint_matrix(&self, x: &DVector<f64>) -> BlockSymMatrix;

    /// Partial derivative of the matrix constraint with respect to `x[i]`.
    fn constraint_matrix_partial(&self, x: &DVector<f64>, i: usize) -> BlockSymMatrix;

    /// Documented starting points for this problem, in canonical order.
    fn initial_points(&self) -> Vec<DVector<f64>>;
}

/// All first-order information at a fixed point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub x: DVector<f64>,
    pub f: f64,
    pub grad: DVector<f64>,
    pub eq: DVector<f64>,
    pub eq_jac: DMatrix<f64>,
    pub mat: BlockSymMatrix,
    /// One partial per variable, same block structure as `mat`.
    pub mat_partials: Vec<BlockSymMatrix>,
}

/// Evaluates everything the solver needs at `x`, rejecting non-finite
/// output so downstream linear algebra never sees NaN.
pub fn evaluate(p: &dyn NsdpProblem, x: &DVector<f64>) -> Result<Evaluation, EvalError> {
    let n = p.dim();
    assert_eq!(x.len(), n, "point has wrong dimension for {}", p.name());
    let fail = |quantity: &'static str| EvalError { quantity, x: x.iter().copied().collect() };

    let f = p.objective(x);
    if !f.is_finite() {
        return Err(fail("objective"));
    }
    let grad = p.gradient(x);
    if grad.len() != n || !grad.iter().all(|v| v.is_finite()) {
        return Err(fail("gradient"));
    }
    let eq = p.equalities(x);
    if eq.len() != p.num_eq() || !eq.iter().all(|v| v.is_finite()) {
        return Err(fail("equalities"));
    }
    let eq_jac = p.equality_jacobian(x);
    if eq_jac.nrows() != p.num_eq() || eq_jac.ncols() != n || !eq_jac.iter().all(|v| v.is_finite())
    {
        return Err(fail("equality jacobian"));
    }
    let mat = p.constraint_matrix(x);
    if mat.dims() != p.block_dims() || !mat.is_finite() {
        return Err(fail("constraint matrix"));
    }
    let mut mat_partials = Vec::with_capacity(n);
    for i in 0..n {
        let d = p.constraint_matrix_partial(x, i);
        if !d.same_shape(&mat) || !d.is_finite() {
            return Err(fail("constraint matrix partial"));
        }
        mat_partials.push(d);
    }
    Ok(Evaluation { x: x.clone(), f, grad, eq, eq_jac, mat, mat_partials })
}

/// Directional derivative of the matrix constraint: `sum_i d[i] * dG_i`.
pub fn dg_apply(e: &Evaluation, d: &DVector<f64>) -> BlockSymMatrix {
    assert_eq!(d.len(), e.mat_partials.len(), "direction has wrong dimension");
    let mut out = BlockSymMatrix::zeros(&e.mat.dims());
    for (i, part) in e.mat_partials.iter().enumerate() {
        if d[i] != 0.0 {
            out = out.add_scaled(d[i], part);
        }
    }
    out
}

/// Adjoint of the map above: component `i` is `<dG_i, y>`.
pub fn dg_adjoint(e: &Evaluation, y: &BlockSymMatrix) -> DVector<f64> {
    assert!(y.same_shape(&e.mat), "multiplier has wrong block structure");
    DVector::from_fn(e.mat_partials.len(), |i, _| crate::symmat::inner(&e.mat_partials[i], y))
}

/// Worst relative finite-difference error per quantity; see
/// [`check_derivatives`].
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub grad_err: f64,
    pub eq_jac_err: f64,
    pub mat_err: f64,
}

impl DerivativeReport {
    pub fn max_err(&self) -> f64 {
        self.grad_err.max(self.eq_jac_err).max(self.mat_err)
    }
}

/// Central-difference validation of all analytic derivatives at `x`.
///
/// Each analytic entry `a` is compared against its finite-difference
/// estimate `fd` through `|fd - a| / (1 + |a|)`, and the worst ratio per
/// quantity is reported.
pub fn check_derivatives(
    p: &dyn NsdpProblem,
    x: &DVector<f64>,
    step: f64,
) -> Result<DerivativeReport, EvalError> {
    assert!(step > 0.0, "step must be positive");
    let n = p.dim();
    let base = evaluate(p, x)?;
    let rel = |fd: f64, a: f64| (fd - a).abs() / (1.0 + a.abs());

    let mut grad_err: f64 = 0.0;
    let mut eq_jac_err: f64 = 0.0;
    let mut mat_err: f64 = 0.0;
    for i in 0..n {
        let mut xp = x.clone();
        xp[i] += step;
        let ep = evaluate(p, &xp)?;
        let mut xm = x.clone();
        xm[i] -= step;
        let em = evaluate(p, &xm)?;
        let inv2h = 1.0 / (2.0 * step);

        grad_err = grad_err.max(rel((ep.f - em.f) * inv2h, base.grad[i]));
        for r in 0..p.num_eq() {
            eq_jac_err = eq_jac_err.max(rel((ep.eq[r] - em.eq[r]) * inv2h, base.eq_jac[(r, i)]));
        }
        let part = &base.mat_partials[i];
        for (b, blk) in part.blocks().iter().enumerate() {
            for jj in 0..blk.order() {
                for ii in 0..=jj {
                    let fd = (ep.mat.block(b).get(ii, jj) - em.mat.block(b).get(ii, jj)) * inv2h;
                    mat_err = mat_err.max(rel(fd, blk.get(ii, jj)));
                }
            }
        }
    }
    Ok(DerivativeReport { grad_err, eq_jac_err, mat_err })
}
