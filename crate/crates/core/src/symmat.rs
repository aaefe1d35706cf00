//! Block diagonal symmetric matrices and their spectral operations.
//!
//! Matrix constraints in this crate always carry a block structure: a value
//! is a list of symmetric blocks, and every operation (inner products,
//! eigendecompositions, negative-part projections) respects that structure.
//! Blocks store only the upper triangle, so symmetry holds by construction.
//!
//! Eigendecompositions use cyclic Jacobi rotations. Block orders in this
//! solver are small (rarely above 15), where Jacobi is simple, accurate, and
//! has no trouble with clustered eigenvalues.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sweep cap for the Jacobi iteration. Convergence is quadratic; small
/// blocks settle in well under ten sweeps, so hitting this cap signals
/// corrupted input (NaN entries and the like).
const JACOBI_MAX_SWEEPS: usize = 30;

/// Off-diagonal Frobenius threshold, relative to the Frobenius norm of the
/// input block.
const JACOBI_REL_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymMatError {
    #[error("Jacobi iteration did not converge on block {block} (order {order})")]
    NoConvergence { block: usize, order: usize },
    #[error("matrix entry ({i},{j}) differs from its transpose by {delta:e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },
}

/// One symmetric block, packed upper triangle in column major order:
/// entry `(i, j)` with `i <= j` lives at `i + j*(j+1)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymBlock {
    order: usize,
    packed: Vec<f64>,
}

#[inline]
fn pk(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    i + j * (j + 1) / 2
}

impl SymBlock {
    pub fn zeros(order: usize) -> Self {
        SymBlock { order, packed: vec![0.0; order * (order + 1) / 2] }
    }

    pub fn identity(order: usize) -> Self {
        Self::scaled_identity(order, 1.0)
    }

    pub fn scaled_identity(order: usize, a: f64) -> Self {
        let mut b = Self::zeros(order);
        for j in 0..order {
            b.packed[pk(j, j)] = a;
        }
        b
    }

    /// Builds a block from its upper triangle; `f` is only called with
    /// `i <= j`.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut b = Self::zeros(order);
        for j in 0..order {
            for i in 0..=j {
                b.packed[pk(i, j)] = f(i, j);
            }
        }
        b
    }

    /// Packs a dense matrix, requiring symmetry up to a small relative
    /// tolerance.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self, SymMatError> {
        assert_eq!(m.nrows(), m.ncols(), "block must be square");
        let scale = 1.0 + m.amax();
        for j in 0..m.ncols() {
            for i in 0..j {
                let delta = (m[(i, j)] - m[(j, i)]).abs();
                if delta > 1e-9 * scale {
                    return Err(SymMatError::NotSymmetric { i, j, delta });
                }
            }
        }
        Ok(Self::from_dense_symmetrize(m))
    }

    /// Packs `(M + M^T)/2` without checking symmetry first. Intended for
    /// products that are symmetric in exact arithmetic.
    pub fn from_dense_symmetrize(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "block must be square");
        Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.packed[pk(i, j)]
        } else {
            self.packed[pk(j, i)]
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order, self.order, |i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|j| self.packed[pk(j, j)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Frobenius inner product `tr(A B)`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.order, other.order, "block order mismatch in inner product");
        let mut diag = 0.0;
        let mut off = 0.0;
        for j in 0..self.order {
            diag += self.packed[pk(j, j)] * other.packed[pk(j, j)];
            for i in 0..j {
                off += self.packed[pk(i, j)] * other.packed[pk(i, j)];
            }
        }
        diag + 2.0 * off
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        assert_eq!(self.order, other.order, "block order mismatch in add");
        let packed = self
            .packed
            .iter()
            .zip(&other.packed)
            .map(|(x, y)| x + a * y)
            .collect();
        SymBlock { order: self.order, packed }
    }

    pub fn scale(&self, a: f64) -> Self {
        SymBlock { order: self.order, packed: self.packed.iter().map(|x| a * x).collect() }
    }

    /// `self + a * I`.
    pub fn shift_diag(&self, a: f64) -> Self {
        let mut b = self.clone();
        for j in 0..self.order {
            b.packed[pk(j, j)] += a;
        }
        b
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|x| x.is_finite())
    }

    /// Eigendecomposition of this block: values sorted nonincreasing and the
    /// matching orthogonal eigenvector matrix (columns follow the sort).
    pub fn eigen(&self) -> Result<(Vec<f64>, DMatrix<f64>), SymMatError> {
        self.eigen_tagged(0)
    }

    fn eigen_tagged(&self, block: usize) -> Result<(Vec<f64>, DMatrix<f64>), SymMatError> {
        let n = self.order;
        if n == 0 {
            return Ok((Vec::new(), DMatrix::zeros(0, 0)));
        }
        if n == 1 {
            return Ok((vec![self.packed[0]], DMatrix::identity(1, 1)));
        }
        let mut a = self.to_dense();
        let mut v = DMatrix::identity(n, n);
        let norm = self.norm_fro();
        if !norm.is_finite() {
            return Err(SymMatError::NoConvergence { block, order: n });
        }
        let tol = JACOBI_REL_TOL * norm;
        let mut converged = norm == 0.0;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off2 = 0.0;
            for j in 0..n {
                for i in 0..j {
                    off2 += a[(i, j)] * a[(i, j)];
                }
            }
            if (2.0 * off2).sqrt() <= tol {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if theta.abs() > 1e150 {
                        // limit of the stable formula, avoids theta^2 overflow
                        1.0 / (2.0 * theta)
                    } else {
                        theta.signum() / (theta.abs() + theta.hypot(1.0))
                    };
                    let c = 1.0 / t.hypot(1.0);
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    a[(p, p)] = app - t * apq;
                    a[(q, q)] = aqq + t * apq;
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for i in 0..n {
                        if i != p && i != q {
                            let aip = a[(i, p)];
                            let aiq = a[(i, q)];
                            let nip = aip - s * (aiq + tau * aip);
                            let niq = aiq + s * (aip - tau * aiq);
                            a[(i, p)] = nip;
                            a[(p, i)] = nip;
                            a[(i, q)] = niq;
                            a[(q, i)] = niq;
                        }
                    }
                    for i in 0..n {
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = vip - s * (viq + tau * vip);
                        v[(i, q)] = viq + s * (vip - tau * viq);
                    }
                }
            }
        }
        if !converged {
            let mut off2 = 0.0;
            for j in 0..n {
                for i in 0..j {
                    off2 += a[(i, j)] * a[(i, j)];
                }
            }
            if (2.0 * off2).sqrt() > tol {
                return Err(SymMatError::NoConvergence { block, order: n });
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
        let values: Vec<f64> = idx.iter().map(|&i| a[(i, i)]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, cidx| v[(r, idx[cidx])]);
        Ok((values, vectors))
    }
}

/// Block diagonal symmetric matrix. The block list (count and orders) is
/// fixed at construction; all operations return new values, so shared
/// references are safe across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSymMatrix {
    blocks: Vec<SymBlock>,
}

impl BlockSymMatrix {
    pub fn new(blocks: Vec<SymBlock>) -> Self {
        BlockSymMatrix { blocks }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        BlockSymMatrix { blocks: dims.iter().map(|&d| SymBlock::zeros(d)).collect() }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self::scaled_identity(dims, 1.0)
    }

    pub fn scaled_identity(dims: &[usize], a: f64) -> Self {
        BlockSymMatrix { blocks: dims.iter().map(|&d| SymBlock::scaled_identity(d, a)).collect() }
    }

    /// Builds every block from its upper triangle: `f(b, i, j)` with `i <= j`.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        BlockSymMatrix {
            blocks: dims
                .iter()
                .enumerate()
                .map(|(b, &d)| SymBlock::from_fn(d, |i, j| f(b, i, j)))
                .collect(),
        }
    }

    pub fn blocks(&self) -> &[SymBlock] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &SymBlock {
        &self.blocks[b]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.order()).collect()
    }

    /// Total order, i.e. the sum of the block orders.
    pub fn order(&self) -> usize {
        self.blocks.iter().map(|b| b.order()).sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.order() == b.order())
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.blocks.iter().map(|b| b.inner(b)).sum::<f64>().max(0.0).sqrt()
    }

    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        assert!(self.same_shape(other), "block structure mismatch in add");
        BlockSymMatrix {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(x, y)| x.add_scaled(a, y))
                .collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        BlockSymMatrix { blocks: self.blocks.iter().map(|b| b.scale(a)).collect() }
    }

    /// `self + a * I`.
    pub fn shift_diag(&self, a: f64) -> Self {
        BlockSymMatrix { blocks: self.blocks.iter().map(|b| b.shift_diag(a)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.is_finite())
    }
}

/// Per-block eigendecomposition result.
#[derive(Debug, Clone)]
pub struct BlockEigen {
    /// Eigenvalues of this block, sorted nonincreasing.
    pub values: Vec<f64>,
    /// Orthogonal matrix whose columns are the matching eigenvectors.
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues of the whole block matrix, sorted nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// One decomposition per block, in block order.
    pub blocks: Vec<BlockEigen>,
}

/// Eigendecomposition of every block. The error names the offending block.
pub fn sym_eigen(a: &BlockSymMatrix) -> Result<EigenDecomposition, SymMatError> {
    let mut blocks = Vec::with_capacity(a.num_blocks());
    let mut all = Vec::with_capacity(a.order());
    for (idx, blk) in a.blocks().iter().enumerate() {
        let (values, vectors) = blk.eigen_tagged(idx).map_err(|e| match e {
            SymMatError::NoConvergence { order, .. } => SymMatError::NoConvergence { block: idx, order },
            other => other,
        })?;
        all.extend_from_slice(&values);
        blocks.push(BlockEigen { values, vectors });
    }
    all.sort_by(|x, y| y.total_cmp(x));
    Ok(EigenDecomposition { eigenvalues: all, blocks })
}

/// Largest eigenvalue over all blocks. Returns `-inf` for an empty block
/// list so that `[lambda_max]_+` degrades to zero.
pub fn lambda_max(a: &BlockSymMatrix) -> Result<f64, SymMatError> {
    let dec = sym_eigen(a)?;
    Ok(dec.eigenvalues.first().copied().unwrap_or(f64::NEG_INFINITY))
}

/// Projection onto the negative semidefinite cone (in Frobenius norm):
/// eigenvalues are clamped at zero from above, eigenvectors kept.
pub fn project_neg(a: &BlockSymMatrix) -> Result<BlockSymMatrix, SymMatError> {
    let dec = sym_eigen(a)?;
    let blocks = dec
        .blocks
        .iter()
        .map(|be| {
            let n = be.values.len();
            let mut dense = DMatrix::zeros(n, n);
            for (k, &lam) in be.values.iter().enumerate() {
                let lneg = lam.min(0.0);
                if lneg != 0.0 {
                    let col = be.vectors.column(k);
                    for i in 0..n {
                        for j in 0..n {
                            dense[(i, j)] += lneg * col[i] * col[j];
                        }
                    }
                }
            }
            SymBlock::from_dense_symmetrize(&dense)
        })
        .collect();
    Ok(BlockSymMatrix::new(blocks))
}

/// Frobenius inner product of two block matrices with the same structure.
pub fn inner(a: &BlockSymMatrix, b: &BlockSymMatrix) -> f64 {
    assert!(a.same_shape(b), "block structure mismatch in inner product");
    a.blocks().iter().zip(b.blocks()).map(|(x, y)| x.inner(y)).sum()
}
