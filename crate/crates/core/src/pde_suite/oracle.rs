//! Direct-elimination reference solvers.
//!
//! These stay deliberately independent of the convolution machinery: the
//! benchmark matrix is assembled from its banded-diagonal definition, not from
//! a kernel, so multigrid results are checked against a genuinely separate
//! route. Systems stay small (a few thousand unknowns), so dense LU with
//! partial pivoting is plenty.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{BoundaryKind, Field2D};
use crate::stencils::OperatorSpec;

/// The discrete Poisson benchmark matrix: coefficients `[4, -1, -1, -1, -1]`
/// (center, left, right, up, down) on an H x W grid flattened row-major, with
/// horizontal couplings zeroed where a grid row wraps, keeping the block
/// tridiagonal structure of homogeneous Dirichlet conditions.
pub fn linear_system_matrix(height: usize, width: usize) -> DMatrix<f64> {
    let n = height * width;
    let mut a = DMatrix::zeros(n, n);
    for p in 0..n {
        a[(p, p)] = 4.0;
        let j = p % width;
        if j > 0 {
            a[(p, p - 1)] = -1.0;
        }
        if j + 1 < width {
            a[(p, p + 1)] = -1.0;
        }
        if p >= width {
            a[(p, p - width)] = -1.0;
        }
        if p + width < n {
            a[(p, p + width)] = -1.0;
        }
    }
    a
}

/// Assembles the dense matrix of a kernel acting on an H x W field with the
/// given boundary padding rule (each matrix row is one output cell).
pub fn dense_matrix_from_kernel(
    op: &OperatorSpec,
    height: usize,
    width: usize,
    boundary: BoundaryKind,
) -> DMatrix<f64> {
    let n = height * width;
    let mut a = DMatrix::zeros(n, n);
    let probe = Field2D::new(height, width, op.spacing(), boundary);
    for i in 0..height as isize {
        for j in 0..width as isize {
            let row = (i as usize) * width + j as usize;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let c = op.kernel().at(dr, dc);
                    if c == 0.0 {
                        continue;
                    }
                    // Resolve the padded read to a stored cell (or to nothing).
                    let (ri, rj) = (i + dr, j + dc);
                    let resolved = resolve_padded(&probe, ri, rj);
                    if let Some((ci, cj)) = resolved {
                        a[(row, ci * width + cj)] += c;
                    }
                }
            }
        }
    }
    a
}

/// Mirrors `Field2D::sample_padded`, returning the cell an out-of-range read
/// lands on, or `None` when the padding rule supplies a zero.
fn resolve_padded(field: &Field2D, i: isize, j: isize) -> Option<(usize, usize)> {
    let h = field.height() as isize;
    let w = field.width() as isize;
    if i >= 0 && i < h && j >= 0 && j < w {
        return Some((i as usize, j as usize));
    }
    // Probe with a marker: set each candidate cell and see if the padded
    // sample follows it. Cheaper: replicate the clamping logic through the
    // public API by sampling indicator fields is overkill; reuse the rule via
    // a one-off indicator read.
    let mut indicator = field.clone();
    let (ci, cj) = (i.clamp(0, h - 1) as usize, j.clamp(0, w - 1) as usize);
    indicator.set(ci, cj, 1.0);
    if indicator.sample_padded(i, j) == 1.0 {
        Some((ci, cj))
    } else {
        None
    }
}

/// Reusable dense LU factorization for repeated solves against one matrix.
pub struct DirectSolver {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl DirectSolver {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        let lu = matrix.lu();
        if lu.determinant() == 0.0 {
            return Err(Error::SingularMatrix);
        }
        Ok(Self { lu, n })
    }

    pub fn solve_slice(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::ShapeMismatch(self.n, 1, rhs.len(), 1));
        }
        let b = DVector::from_column_slice(rhs);
        let x = self.lu.solve(&b).ok_or(Error::SingularMatrix)?;
        Ok(x.as_slice().to_vec())
    }

    pub fn solve_field(&self, rhs: &Field2D) -> Result<Field2D> {
        let x = self.solve_slice(rhs.values())?;
        Field2D::from_values(x, rhs.height(), rhs.width(), rhs.spacing(), rhs.boundary())
    }
}

/// One-shot reference solve of `op x = b` under `b`'s boundary rule.
pub fn direct_sparse_oracle(op: &OperatorSpec, b: &Field2D) -> Result<Field2D> {
    let matrix = dense_matrix_from_kernel(op, b.height(), b.width(), b.boundary());
    DirectSolver::new(matrix)?.solve_field(b)
}
