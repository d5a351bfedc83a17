use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::linalg::{checked_cholesky, dot};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Fewer independent rows than state dimensions; the gain uses the
    /// projector onto the selected row space.
    Underdetermined,
    /// `Cᵀ R⁻¹ C` is invertible; the gain uses its inverse.
    Overdetermined,
}

/// Incremental matrices carried across greedy steps.
///
/// `R_S⁻¹` and `(C_B C_Bᵀ)⁻¹` (over a row basis `B` of `C_S`) grow by the
/// 2x2 block-inverse formula. Once `C_S` has full column rank the `r x r`
/// inverse of `C_Sᵀ R_S⁻¹ C_S` is refreshed by direct factorization after
/// every accepted sensor.
#[derive(Debug, Clone)]
pub struct SelectionState<T: Real> {
    rank: usize,
    indices: Vec<usize>,
    selected_rows: DMatrix<T>,
    noise_inv: DMatrix<T>,
    basis: Vec<usize>,
    basis_rows: DMatrix<T>,
    gram_inv: DMatrix<T>,
    noise_inv_rows: DMatrix<T>,
    info_inv: Option<DMatrix<T>>,
    logdet_noise: T,
    logdet_gram: T,
    logdet_info: T,
    deferred_transitions: usize,
}

fn block_extend<T: Real>(inv: &DMatrix<T>, b: &DVector<T>, gamma: T) -> DMatrix<T> {
    let p = inv.nrows();
    let mut out = DMatrix::zeros(p + 1, p + 1);
    let inv_gamma = T::one() / gamma;
    for j in 0..p {
        for i in 0..p {
            out[(i, j)] = inv[(i, j)] + b[i] * b[j] * inv_gamma;
        }
        out[(p, j)] = -b[j] * inv_gamma;
        out[(j, p)] = -b[j] * inv_gamma;
    }
    out[(p, p)] = inv_gamma;
    out
}

impl<T: Real> SelectionState<T> {
    /// Empty state for an `r`-dimensional state vector.
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            indices: Vec::new(),
            selected_rows: DMatrix::zeros(0, rank),
            noise_inv: DMatrix::zeros(0, 0),
            basis: Vec::new(),
            basis_rows: DMatrix::zeros(0, rank),
            gram_inv: DMatrix::zeros(0, 0),
            noise_inv_rows: DMatrix::zeros(0, rank),
            info_inv: None,
            logdet_noise: T::zero(),
            logdet_gram: T::zero(),
            logdet_info: T::zero(),
            deferred_transitions: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        if self.info_inv.is_some() {
            Phase::Overdetermined
        } else {
            Phase::Underdetermined
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `C_S`, the selected rows of `U` in selection order.
    pub fn selected_rows(&self) -> &DMatrix<T> {
        &self.selected_rows
    }

    /// Current `(R_S + εI)⁻¹`.
    pub fn noise_inverse(&self) -> &DMatrix<T> {
        &self.noise_inv
    }

    /// Current `(C_Sᵀ R_S⁻¹ C_S)⁻¹`, once in the overdetermined phase.
    pub fn information_inverse(&self) -> Option<&DMatrix<T>> {
        self.info_inv.as_ref()
    }

    /// Steps taken with `|S| ≥ r` while `C_S` was still column-rank deficient.
    pub fn deferred_transitions(&self) -> usize {
        self.deferred_transitions
    }

    fn check_dims(&self, u: &[T], s: &[T]) -> Result<()> {
        if u.len() != self.rank {
            return Err(Error::DimensionMismatch(format!(
                "candidate row has length {}, expected {}",
                u.len(),
                self.rank
            )));
        }
        if s.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "cross covariance has length {}, expected {}",
                s.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Schur complement `γ = t − s R_S⁻¹ sᵀ`, rejected when `γ ≤ tol · t`.
    pub fn schur(&self, s: &[T], t: T) -> Result<T> {
        let sv = DVectorView::from_slice(s, s.len());
        let gamma = t - (&self.noise_inv * sv).dot(&sv);
        if !gamma.is_finite() || gamma <= T::lit(T::SCHUR_TOL) * t.abs() || gamma <= T::zero() {
            return Err(Error::NonpositiveSchur { gamma: gamma.as_f64(), variance: t.as_f64() });
        }
        Ok(gamma)
    }

    /// `u (I − C_Bᵀ (C_B C_Bᵀ)⁻¹ C_B) uᵀ`, the squared norm of `u` outside the
    /// selected row space. Clamped at zero.
    pub fn projected_norm(&self, u: &[T]) -> T {
        let uv = DVectorView::from_slice(u, u.len());
        let w = &self.basis_rows * uv;
        let value = dot(u, u) - (&self.gram_inv * &w).dot(&w);
        value.max(T::zero())
    }

    /// Greedy gain while underdetermined: projected norm over `γ`.
    pub fn gain_under(&self, u: &[T], s: &[T], t: T) -> Result<T> {
        self.check_dims(u, s)?;
        let gamma = self.schur(s, t)?;
        Ok(self.projected_norm(u) / gamma)
    }

    /// Greedy gain while overdetermined: `φ A⁻¹ φᵀ / γ` with
    /// `φ = s R_S⁻¹ C_S − u`. Adding the candidate multiplies
    /// `det(C_Sᵀ R_S⁻¹ C_S)` by `1 + gain`.
    pub fn gain_over(&self, u: &[T], s: &[T], t: T) -> Result<T> {
        self.check_dims(u, s)?;
        let info_inv = self.info_inv.as_ref().ok_or(Error::SingularInformation)?;
        let gamma = self.schur(s, t)?;
        let sv = DVectorView::from_slice(s, s.len());
        let mut phi = self.noise_inv_rows.tr_mul(&sv);
        for (k, &uk) in u.iter().enumerate() {
            phi[k] -= uk;
        }
        Ok((info_inv * &phi).dot(&phi) / gamma)
    }

    /// Gain for the current phase.
    pub fn gain(&self, u: &[T], s: &[T], t: T) -> Result<T> {
        match self.phase() {
            Phase::Underdetermined => self.gain_under(u, s, t),
            Phase::Overdetermined => self.gain_over(u, s, t),
        }
    }

    /// Accepts candidate `index` with row `u`, cross covariance `s` and
    /// variance `t`.
    pub fn push(&mut self, index: usize, u: &[T], s: &[T], t: T) -> Result<()> {
        self.check_dims(u, s)?;
        if self.indices.contains(&index) {
            return Err(Error::IndexCollision(index));
        }
        let gamma = self.schur(s, t)?;
        let sv = DVector::from_column_slice(s);
        let b = &self.noise_inv * &sv;
        self.noise_inv = block_extend(&self.noise_inv, &b, gamma);
        self.logdet_noise += gamma.ln();

        let p = self.len();
        let row = nalgebra::RowDVector::from_row_slice(u);

        if self.basis.len() < self.rank {
            let projected = self.projected_norm(u);
            if projected > T::lit(T::RANK_TOL) * dot(u, u) && projected > T::zero() {
                let uv = DVectorView::from_slice(u, u.len());
                let w = &self.basis_rows * uv;
                let bw = &self.gram_inv * &w;
                self.gram_inv = block_extend(&self.gram_inv, &bw, projected);
                self.basis_rows = self.basis_rows.clone().insert_row(self.basis.len(), T::zero());
                self.basis_rows.set_row(self.basis.len(), &row);
                self.basis.push(p);
                self.logdet_gram += projected.ln();
            }
        }

        self.selected_rows = self.selected_rows.clone().insert_row(p, T::zero());
        self.selected_rows.set_row(p, &row);
        self.indices.push(index);
        self.noise_inv_rows = &self.noise_inv * &self.selected_rows;

        if self.len() >= self.rank {
            if self.basis.len() == self.rank {
                let info = self.selected_rows.tr_mul(&self.noise_inv_rows);
                match checked_cholesky(info, None) {
                    Some(chol) => {
                        self.logdet_info = chol.ln_determinant();
                        self.info_inv = Some(chol.inverse());
                    }
                    None => {
                        self.info_inv = None;
                        self.deferred_transitions += 1;
                    }
                }
            } else {
                self.deferred_transitions += 1;
            }
        }
        Ok(())
    }

    /// Natural-log objective of the current set: `log det(R_S⁻¹ C_S C_Sᵀ)`
    /// while underdetermined, `log det(C_Sᵀ R_S⁻¹ C_S)` afterwards. Minus
    /// infinity when the underdetermined matrix is singular.
    pub fn objective(&self) -> T {
        match self.phase() {
            Phase::Overdetermined => self.logdet_info,
            Phase::Underdetermined => {
                if self.basis.len() == self.len() {
                    self.logdet_gram - self.logdet_noise
                } else {
                    T::lit(f64::NEG_INFINITY)
                }
            }
        }
    }
}
