//! Reduced-order model and truncated-mode noise model built from a snapshot
//! matrix by singular value decomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{dot, ensure_finite, frobenius, row_major, select_rows, thin_svd};
use crate::scalar::Real;

/// Raw data: `n` measurement points (rows) by `m` instances (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix<T: Real> {
    values: DMatrix<T>,
}

impl<T: Real> SnapshotMatrix<T> {
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Empty { rows: values.nrows(), cols: values.ncols() });
        }
        ensure_finite(&values)?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.values
    }

    /// Number of measurement points.
    pub fn points(&self) -> usize {
        self.values.nrows()
    }

    /// Number of instances (snapshots).
    pub fn instances(&self) -> usize {
        self.values.ncols()
    }

    /// Column subset as a new snapshot matrix.
    pub fn columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.instances()) {
            return Err(Error::IndexOutOfRange { index: bad, len: self.instances() });
        }
        Self::new(crate::linalg::select_columns(&self.values, cols))
    }
}

/// Rank-`r` truncated SVD of (optionally centered) snapshot data.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOrderModel<T: Real> {
    modes: DMatrix<T>,
    singular_values: DVector<T>,
    temporal: DMatrix<T>,
    mean: Option<DVector<T>>,
}

impl<T: Real> ReducedOrderModel<T> {
    /// Assembles a model from its parts. `modes` is `n x r`, `temporal` is `m x r`.
    pub fn from_parts(
        modes: DMatrix<T>,
        singular_values: DVector<T>,
        temporal: DMatrix<T>,
        mean: Option<DVector<T>>,
    ) -> Result<Self> {
        let r = modes.ncols();
        if r == 0 {
            return Err(Error::DimensionMismatch("model needs at least one mode".into()));
        }
        if singular_values.len() != r || temporal.ncols() != r {
            return Err(Error::DimensionMismatch(format!(
                "modes have {r} columns, singular values {} and temporal modes {}",
                singular_values.len(),
                temporal.ncols()
            )));
        }
        if let Some(mean) = &mean {
            if mean.len() != modes.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "mean has length {}, modes have {} rows",
                    mean.len(),
                    modes.nrows()
                )));
            }
        }
        Ok(Self { modes, singular_values, temporal, mean })
    }

    /// Spatial modes `U` (`n x r`).
    pub fn modes(&self) -> &DMatrix<T> {
        &self.modes
    }

    pub fn singular_values(&self) -> &DVector<T> {
        &self.singular_values
    }

    /// Temporal modes `V` (`m x r`).
    pub fn temporal(&self) -> &DMatrix<T> {
        &self.temporal
    }

    pub fn mean(&self) -> Option<&DVector<T>> {
        self.mean.as_ref()
    }

    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    pub fn points(&self) -> usize {
        self.modes.nrows()
    }

    /// Training states `Σ Vᵀ` (`r x m`).
    pub fn states(&self) -> DMatrix<T> {
        let mut z = self.temporal.transpose();
        for (k, mut row) in z.row_iter_mut().enumerate() {
            row *= self.singular_values[k];
        }
        z
    }
}

/// Low-rank factor `N` (`n x q`) of the noise covariance `N Nᵀ`, plus a ridge
/// `ε` added to its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFactor<T: Real> {
    factor: DMatrix<T>,
    ridge: T,
    rows: Vec<T>,
}

impl<T: Real> NoiseFactor<T> {
    pub fn new(factor: DMatrix<T>, ridge: T) -> Result<Self> {
        ensure_finite(&factor)?;
        if !ridge.is_finite() || ridge < T::zero() {
            return Err(Error::InvalidConfig(format!("ridge must be finite and nonnegative, got {ridge}")));
        }
        if factor.nrows() == 0 {
            return Err(Error::Empty { rows: 0, cols: factor.ncols() });
        }
        let rows = row_major(&factor);
        Ok(Self { factor, ridge, rows })
    }

    /// Builds the factor with the default relative ridge.
    pub fn with_default_ridge(factor: DMatrix<T>) -> Result<Self> {
        let ridge = default_ridge(&factor);
        Self::new(factor, ridge)
    }

    /// White noise `variance · I` on `n` candidates (empty factor, ridge only).
    pub fn white(n: usize, variance: T) -> Result<Self> {
        Self::new(DMatrix::zeros(n, 0), variance)
    }

    /// Factor of a dense symmetric positive semidefinite covariance.
    ///
    /// Eigenvalues below `-1e-10·trace` are rejected; small negative ones are
    /// clipped to zero.
    pub fn from_covariance(cov: &DMatrix<T>, ridge: T) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::DimensionMismatch("covariance must be square".into()));
        }
        ensure_finite(cov)?;
        let n = cov.nrows();
        let mut sym = cov.clone();
        crate::linalg::symmetrize(&mut sym);
        let trace = sym.trace();
        let eig = SymmetricEigen::new(sym);
        let floor = -T::lit(1e-10) * trace.abs();
        if eig.eigenvalues.iter().any(|&l| l < floor) {
            return Err(Error::InvalidConfig("covariance is not positive semidefinite".into()));
        }
        let keep: Vec<usize> =
            (0..n).filter(|&k| eig.eigenvalues[k] > T::zero()).collect();
        let factor = DMatrix::from_fn(n, keep.len(), |i, j| {
            eig.eigenvectors[(i, keep[j])] * eig.eigenvalues[keep[j]].sqrt()
        });
        Self::new(factor, ridge)
    }

    /// Compresses a residual snapshot matrix `X_N` into `U_N Σ_N`, so that
    /// `N Nᵀ = X_N X_Nᵀ`. Numerically zero singular values are dropped.
    pub fn from_residual(residual: &DMatrix<T>, ridge: Option<T>) -> Result<Self> {
        ensure_finite(residual)?;
        let n = residual.nrows();
        if residual.ncols() == 0 {
            let factor = DMatrix::zeros(n, 0);
            let ridge = ridge.unwrap_or_else(|| default_ridge(&factor));
            return Self::new(factor, ridge);
        }
        let svd = thin_svd(residual)?;
        let u = svd.u;
        let sv = &svd.s;
        let tol = numerical_rank_tol(sv, n.max(residual.ncols()));
        let q = sv.iter().take_while(|&&s| s > tol).count();
        let mut factor = u.columns(0, q).into_owned();
        for k in 0..q {
            let mut col = factor.column_mut(k);
            col *= sv[k];
            fix_sign(col.as_mut_slice(), &mut []);
        }
        let ridge = ridge.unwrap_or_else(|| default_ridge(&factor));
        Self::new(factor, ridge)
    }

    pub fn factor(&self) -> &DMatrix<T> {
        &self.factor
    }

    pub fn ridge(&self) -> T {
        self.ridge
    }

    pub fn candidates(&self) -> usize {
        self.factor.nrows()
    }

    /// Number of factor columns `q`.
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn with_ridge(&self, ridge: T) -> Result<Self> {
        Self::new(self.factor.clone(), ridge)
    }

    /// Noise model for `c · (N Nᵀ + εI)`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(Error::InvalidConfig(format!("scale must be positive, got {c}")));
        }
        Self::new(&self.factor * c.sqrt(), self.ridge * c)
    }

    /// Row `i` of `N` as a slice.
    pub fn row(&self, i: usize) -> &[T] {
        let q = self.rank();
        &self.rows[i * q..(i + 1) * q]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.candidates() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: self.candidates() })
        }
    }

    /// Noise variance `t_i = ‖row_i(N)‖² + ε`.
    pub fn variance(&self, i: usize) -> Result<T> {
        self.check_index(i)?;
        let row = self.row(i);
        Ok(dot(row, row) + self.ridge)
    }

    /// Noise variance with the ridge removed, `‖row_i(N)‖²`.
    pub fn raw_variance(&self, i: usize) -> Result<T> {
        self.check_index(i)?;
        let row = self.row(i);
        Ok(dot(row, row))
    }

    /// Covariance between candidate `i` and each selected sensor in `selected`.
    pub fn cross(&self, i: usize, selected: &[usize]) -> Result<DVector<T>> {
        self.check_index(i)?;
        let mut out = DVector::zeros(selected.len());
        for (k, &j) in selected.iter().enumerate() {
            self.check_index(j)?;
            if j == i {
                return Err(Error::IndexCollision(i));
            }
            out[k] = dot(self.row(i), self.row(j));
        }
        Ok(out)
    }

    /// Dense `R_S + εI` for the sensors in `selected`.
    pub fn covariance_submatrix(&self, selected: &[usize]) -> Result<DMatrix<T>> {
        for &j in selected {
            self.check_index(j)?;
        }
        let rows = select_rows(&self.factor, selected);
        let mut cov = &rows * rows.transpose();
        for k in 0..selected.len() {
            cov[(k, k)] += self.ridge;
        }
        Ok(cov)
    }

    /// Dense `N Nᵀ + εI`. Only sensible for small candidate counts.
    pub fn dense(&self) -> DMatrix<T> {
        let mut cov = &self.factor * self.factor.transpose();
        for k in 0..self.candidates() {
            cov[(k, k)] += self.ridge;
        }
        cov
    }

    /// `trace(N Nᵀ)`.
    pub fn trace(&self) -> T {
        let f = frobenius(&self.factor);
        f * f
    }
}

/// Default ridge `1e-12 · trace(N Nᵀ) / n`; falls back to `1` when the noise
/// factor is identically zero, so the model degenerates to white noise.
pub fn default_ridge<T: Real>(factor: &DMatrix<T>) -> T {
    let n = factor.nrows().max(1);
    let f = frobenius(factor);
    let trace = f * f;
    if trace > T::zero() {
        T::lit(1e-12) * trace / T::from_usize(n).unwrap()
    } else {
        T::one()
    }
}

fn numerical_rank_tol<T: Real>(sv: &DVector<T>, dim: usize) -> T {
    let max = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    max * T::from_usize(dim).unwrap() * T::default_epsilon()
}

/// Flips `primary` (and `partner`) so the largest-magnitude entry of
/// `primary` is positive. Ties resolve to the first occurrence.
fn fix_sign<T: Real>(primary: &mut [T], partner: &mut [T]) {
    let mut best = T::zero();
    let mut sign_negative = false;
    for &v in primary.iter() {
        if v.abs() > best {
            best = v.abs();
            sign_negative = v < T::zero();
        }
    }
    if sign_negative {
        primary.iter_mut().for_each(|v| *v = -*v);
        partner.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Splits `X` into a rank-`r` model and the truncated-mode noise factor.
///
/// With `center`, the column mean is subtracted first and stored in the model.
/// Mode signs are fixed so the largest-magnitude entry of each spatial mode is
/// positive.
pub fn fit_rom<T: Real>(
    x: &SnapshotMatrix<T>,
    r: usize,
    center: bool,
) -> Result<(ReducedOrderModel<T>, NoiseFactor<T>)> {
    let (n, m) = (x.points(), x.instances());
    if r == 0 || r >= n.min(m) {
        return Err(Error::RankOutOfRange { rank: r, rows: n, cols: m });
    }
    let mut data = x.values().clone();
    let mean = if center {
        let mean = data.column_mean();
        for mut col in data.column_iter_mut() {
            col -= &mean;
        }
        Some(mean)
    } else {
        None
    };

    let svd = thin_svd(&data)?;
    let (mut u, mut v_t, sv) = (svd.u, svd.v_t, svd.s);
    let k = sv.len();

    for j in 0..k {
        let mut right: Vec<T> = v_t.row(j).iter().copied().collect();
        fix_sign(u.column_mut(j).as_mut_slice(), &mut right);
        for (c, v) in right.into_iter().enumerate() {
            v_t[(j, c)] = v;
        }
    }

    let tol = numerical_rank_tol(&sv, n.max(m));
    let q = sv.iter().skip(r).take_while(|&&s| s > tol).count();

    let modes = u.columns(0, r).into_owned();
    let temporal = v_t.rows(0, r).transpose();
    let singular_values = sv.rows(0, r).into_owned();
    let mut factor = u.columns(r, q).into_owned();
    for j in 0..q {
        let mut col = factor.column_mut(j);
        col *= sv[r + j];
    }

    let rom = ReducedOrderModel::from_parts(modes, singular_values, temporal, mean)?;
    let noise = NoiseFactor::with_default_ridge(factor)?;
    Ok((rom, noise))
}
