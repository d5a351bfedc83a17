//! Small dense helpers shared by the numerical modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Thin SVD `m = u diag(s) v_t` with `s` nonincreasing.
pub struct ThinSvd<T: Real> {
    pub u: DMatrix<T>,
    pub s: DVector<T>,
    pub v_t: DMatrix<T>,
}

/// Thin SVD computed in `f64`.
///
/// nalgebra's bidiagonal iteration loses about half the digits on exactly
/// rank-deficient input, so this goes through faer.
pub fn thin_svd<T: Real>(m: &DMatrix<T>) -> Result<ThinSvd<T>> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(ThinSvd { u: DMatrix::zeros(rows, 0), s: DVector::zeros(0), v_t: DMatrix::zeros(0, cols) });
    }
    ensure_finite(m)?;
    let a = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)].as_f64());
    let svd = a.thin_svd().map_err(|_| Error::NonFinite)?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
    Ok(ThinSvd {
        u: DMatrix::from_fn(rows, k, |i, j| T::lit(u[(i, order[j])])),
        s: DVector::from_fn(k, |j, _| T::lit(s[order[j]])),
        v_t: DMatrix::from_fn(k, cols, |i, j| T::lit(v[(j, order[i])])),
    })
}

/// Gathers the rows `indices` of `m` into a new matrix, in the given order.
pub fn select_rows<T: Real>(m: &DMatrix<T>, indices: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(indices.len(), m.ncols(), |i, j| m[(indices[i], j)])
}

/// Gathers the columns `indices` of `m` into a new matrix, in the given order.
pub fn select_columns<T: Real>(m: &DMatrix<T>, indices: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), indices.len(), |i, j| m[(i, indices[j])])
}

/// Row-major copy of `m`, so that each row is a contiguous slice.
pub fn row_major<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    m.transpose().as_slice().to_vec()
}

pub fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let half = T::lit(0.5);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Cholesky factorization of a symmetric matrix.
///
/// Returns `None` when the matrix is not numerically positive definite or when
/// the squared ratio of extreme pivots (a cheap condition estimate) exceeds
/// `cond_limit`.
pub fn checked_cholesky<T: Real>(
    mut m: DMatrix<T>,
    cond_limit: Option<f64>,
) -> Option<Cholesky<T, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    symmetrize(&mut m);
    let chol = Cholesky::new(m)?;
    if let Some(limit) = cond_limit {
        let l = chol.l_dirty();
        let diag = l.diagonal();
        let max = diag.iter().fold(T::zero(), |a, &b| a.max(b));
        let min = diag.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b));
        if min <= T::zero() {
            return None;
        }
        let ratio = (max / min).as_f64();
        if ratio * ratio > limit {
            return None;
        }
    }
    Some(chol)
}

pub fn frobenius<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
}

pub fn ensure_finite<T: Real>(m: &DMatrix<T>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}
