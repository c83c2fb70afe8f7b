//! Low-rank estimates of the spiked part of a covariance matrix, kept in
//! factored form `Σ_j b_j b_j^T`.
//!
//! Frobenius losses between two factored matrices are computed from their
//! `m x m` Gram matrices, so nothing of size `d x d` is ever formed unless
//! [`LowRankFactor::to_dense`] is called explicitly.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Matrix};
use crate::pca::{NrFit, PcaFit};
use crate::sparse::SparseDirection;

/// Largest dimension [`LowRankFactor::to_dense`] will materialize.
pub const DENSE_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum FactorColumn {
    Dense(Vec<f64>),
    /// `(index, value)` pairs with strictly increasing indices.
    Sparse(Vec<(usize, f64)>),
}

impl FactorColumn {
    pub fn norm_sq(&self) -> f64 {
        match self {
            FactorColumn::Dense(v) => dot(v, v),
            FactorColumn::Sparse(e) => e.iter().map(|x| x.1 * x.1).sum(),
        }
    }

    pub fn dot(&self, other: &FactorColumn) -> f64 {
        use FactorColumn::*;
        match (self, other) {
            (Dense(a), Dense(b)) => dot(a, b),
            (Dense(a), Sparse(b)) | (Sparse(b), Dense(a)) => b.iter().map(|&(i, v)| a[i] * v).sum(),
            (Sparse(a), Sparse(b)) => {
                let (mut i, mut j, mut acc) = (0, 0, 0.0);
                while i < a.len() && j < b.len() {
                    match a[i].0.cmp(&b[j].0) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            acc += a[i].1 * b[j].1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    fn max_index(&self) -> Option<usize> {
        match self {
            FactorColumn::Dense(v) => v.len().checked_sub(1),
            FactorColumn::Sparse(e) => e.last().map(|x| x.0),
        }
    }

    fn scatter_into(&self, out: &mut [f64]) {
        match self {
            FactorColumn::Dense(v) => out.copy_from_slice(v),
            FactorColumn::Sparse(e) => {
                out.iter_mut().for_each(|x| *x = 0.0);
                for &(i, v) in e {
                    out[i] = v;
                }
            }
        }
    }
}

/// The matrix `Σ_j b_j b_j^T` stored by its columns `b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor {
    dim: usize,
    columns: Vec<FactorColumn>,
}

impl LowRankFactor {
    pub fn new(dim: usize, columns: Vec<FactorColumn>) -> Result<Self> {
        if columns.is_empty() {
            return Err(invalid("a low-rank factor needs at least one column"));
        }
        for c in &columns {
            match c {
                FactorColumn::Dense(v) if v.len() != dim => {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: v.len(),
                    })
                }
                FactorColumn::Sparse(e) => {
                    if e.windows(2).any(|w| w[0].0 >= w[1].0) {
                        return Err(invalid("sparse column indices must be strictly increasing"));
                    }
                    if c.max_index().is_some_and(|i| i >= dim) {
                        return Err(invalid("sparse column index out of range"));
                    }
                }
                _ => {}
            }
        }
        Ok(Self { dim, columns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FactorColumn] {
        &self.columns
    }

    /// `A^T B` as an `m_a x m_b` matrix.
    pub fn cross_gram(&self, other: &LowRankFactor) -> Matrix {
        let mut g = Matrix::zeros(self.rank(), other.rank());
        for (i, a) in self.columns.iter().enumerate() {
            for (j, b) in other.columns.iter().enumerate() {
                g.set(i, j, a.dot(b));
            }
        }
        g
    }

    /// Materializes `Σ_j b_j b_j^T`; refused above [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<Matrix> {
        if self.dim > DENSE_LIMIT {
            return Err(invalid(format!(
                "refusing to materialize a {0}x{0} matrix (limit {DENSE_LIMIT})",
                self.dim
            )));
        }
        let mut out = Matrix::zeros(self.dim, self.dim);
        let mut col = vec![0.0; self.dim];
        for c in &self.columns {
            c.scatter_into(&mut col);
            for i in 0..self.dim {
                if col[i] == 0.0 {
                    continue;
                }
                let row = out.row_mut(i);
                for (r, &v) in row.iter_mut().zip(&col) {
                    *r += col[i] * v;
                }
            }
        }
        Ok(out)
    }
}

fn frobenius_sq(m: &Matrix) -> f64 {
    dot(m.as_slice(), m.as_slice())
}

/// `|A A^T - B B^T|_F^2 = |A^T A|_F^2 + |B^T B|_F^2 - 2 |A^T B|_F^2`.
pub fn frobenius_loss(a: &LowRankFactor, b: &LowRankFactor) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let aa = frobenius_sq(&a.cross_gram(a));
    let bb = frobenius_sq(&b.cross_gram(b));
    let ab = frobenius_sq(&a.cross_gram(b));
    Ok((aa + bb - 2.0 * ab).max(0.0))
}

/// Columns `β̃_j = λ̃_j^{1/2} h̃_{j*}` for the given thresholded directions.
pub fn scaled_directions(fit: &NrFit, directions: &[SparseDirection]) -> Result<LowRankFactor> {
    let d = fit.base.d();
    let columns = directions
        .iter()
        .map(|dir| {
            let j = dir.component();
            fit.direction(j)?;
            if dir.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: dir.dim(),
                });
            }
            let s = fit.lambda_tilde[j].sqrt();
            Ok(FactorColumn::Sparse(
                dir.entries().iter().map(|&(i, v)| (i, s * v)).collect(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    LowRankFactor::new(d, columns)
}

/// Columns `β̂_j = λ̂_j^{1/2} ĥ_j` for the first `m` components.
pub fn conventional_intrinsic(fit: &PcaFit, m: usize) -> Result<LowRankFactor> {
    if m == 0 || m > fit.components() {
        return Err(Error::ComponentOutOfRange {
            requested: m,
            available: fit.components(),
        });
    }
    let columns = (0..m)
        .map(|j| {
            let h = fit.direction(j)?;
            let s = fit.lambda_hat[j].sqrt();
            Ok(FactorColumn::Dense(h.iter().map(|v| s * v).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    LowRankFactor::new(fit.d(), columns)
}
