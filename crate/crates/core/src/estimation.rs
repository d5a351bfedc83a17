//! State estimation from selected sensors, field reconstruction and error
//! metrics.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{checked_cholesky, ensure_finite, frobenius, symmetrize, thin_svd};
use crate::rom::{ReducedOrderModel, SnapshotMatrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    /// Minimal-norm / ordinary least squares, noise ignored.
    Ls,
    /// Generalized least squares weighted by the noise covariance.
    Gls,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorKind::Ls => "ls",
            EstimatorKind::Gls => "gls",
        })
    }
}

enum Solver<T: Real> {
    /// `p ≤ r`: `z = Cᵀ (C Cᵀ)⁻¹ y`.
    MinimumNorm { gram: Cholesky<T, Dyn> },
    /// `p > r`: normal equations of the (optionally whitened) system.
    Normal { whitener: Option<Cholesky<T, Dyn>>, whitened: DMatrix<T>, normal: Cholesky<T, Dyn> },
}

/// Prepared linear estimator for a fixed sensor matrix `C` (`p x r`).
///
/// For `p ≤ r` both kinds use the minimal-norm solution, so they coincide.
/// Factorizations are computed once; no explicit inverse is formed.
pub struct Estimator<T: Real> {
    kind: EstimatorKind,
    c: DMatrix<T>,
    solver: Solver<T>,
}

impl<T: Real> Estimator<T> {
    /// `noise` is `R_S + εI` and is required for [`EstimatorKind::Gls`].
    pub fn new(kind: EstimatorKind, c: DMatrix<T>, noise: Option<&DMatrix<T>>) -> Result<Self> {
        let (p, r) = c.shape();
        if p == 0 || r == 0 {
            return Err(Error::Empty { rows: p, cols: r });
        }
        ensure_finite(&c)?;
        let limit = Some(T::COND_LIMIT);
        let solver = if p <= r {
            let gram = checked_cholesky(&c * c.transpose(), limit).ok_or(Error::SingularInformation)?;
            Solver::MinimumNorm { gram }
        } else {
            let whitener = match kind {
                EstimatorKind::Ls => None,
                EstimatorKind::Gls => {
                    let cov = noise.ok_or_else(|| {
                        Error::InvalidConfig("GLS estimation needs a noise covariance".into())
                    })?;
                    if cov.shape() != (p, p) {
                        return Err(Error::DimensionMismatch(format!(
                            "noise covariance is {}x{}, expected {p}x{p}",
                            cov.nrows(),
                            cov.ncols()
                        )));
                    }
                    Some(checked_cholesky(cov.clone(), None).ok_or(Error::SingularNoise)?)
                }
            };
            let whitened = match &whitener {
                Some(chol) => lower_solve(chol, &c),
                None => c.clone(),
            };
            let normal =
                checked_cholesky(whitened.tr_mul(&whitened), limit).ok_or(Error::SingularInformation)?;
            Solver::Normal { whitener, whitened, normal }
        };
        Ok(Self { kind, c, solver })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn sensor_matrix(&self) -> &DMatrix<T> {
        &self.c
    }

    /// Estimates one state per column of `y` (`p x m` → `r x m`).
    pub fn estimate_many(&self, y: &DMatrix<T>) -> Result<DMatrix<T>> {
        if y.nrows() != self.c.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "measurements have {} rows, estimator expects {}",
                y.nrows(),
                self.c.nrows()
            )));
        }
        Ok(match &self.solver {
            Solver::MinimumNorm { gram } => self.c.tr_mul(&gram.solve(y)),
            Solver::Normal { whitener, whitened, normal } => {
                let yw = match whitener {
                    Some(chol) => lower_solve(chol, y),
                    None => y.clone(),
                };
                normal.solve(&whitened.tr_mul(&yw))
            }
        })
    }

    pub fn estimate(&self, y: &DVector<T>) -> Result<DVector<T>> {
        let y = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
        let z = self.estimate_many(&y)?;
        Ok(z.column(0).into_owned())
    }
}

fn lower_solve<T: Real>(chol: &Cholesky<T, Dyn>, b: &DMatrix<T>) -> DMatrix<T> {
    chol.l_dirty()
        .solve_lower_triangular(b)
        .expect("Cholesky factor has a nonzero diagonal")
}

/// `x̃ = U z̃`, plus the model mean when the model is centered.
pub fn reconstruct<T: Real>(rom: &ReducedOrderModel<T>, z: &DVector<T>) -> Result<DVector<T>> {
    let z = DMatrix::from_column_slice(z.len(), 1, z.as_slice());
    Ok(reconstruct_many(rom, &z)?.column(0).into_owned())
}

/// Column-wise [`reconstruct`] of an `r x m` state matrix.
pub fn reconstruct_many<T: Real>(rom: &ReducedOrderModel<T>, z: &DMatrix<T>) -> Result<DMatrix<T>> {
    if z.nrows() != rom.rank() {
        return Err(Error::DimensionMismatch(format!(
            "states have {} rows, model rank is {}",
            z.nrows(),
            rom.rank()
        )));
    }
    let mut x = rom.modes() * z;
    if let Some(mean) = rom.mean() {
        for mut col in x.column_iter_mut() {
            col += mean;
        }
    }
    Ok(x)
}

/// `‖X − X̃‖_F / ‖X‖_F` with `X̃` the reconstruction of the estimated states.
pub fn reconstruction_error<T: Real>(
    x: &SnapshotMatrix<T>,
    rom: &ReducedOrderModel<T>,
    z: &DMatrix<T>,
) -> Result<T> {
    if x.points() != rom.points() || z.ncols() != x.instances() {
        return Err(Error::DimensionMismatch(format!(
            "data is {}x{}, model has {} points, states have {} columns",
            x.points(),
            x.instances(),
            rom.points(),
            z.ncols()
        )));
    }
    let norm = frobenius(x.values());
    if norm == T::zero() {
        return Err(Error::InvalidConfig("reconstruction error of an all-zero matrix".into()));
    }
    let recon = reconstruct_many(rom, z)?;
    Ok(frobenius(&(x.values() - recon)) / norm)
}

/// Estimation-error covariance restricted to the observable subspace of
/// `R^{-1/2} C`, with unit noise scale, and its log-determinant.
///
/// The result is `min(p, r)` square.
pub fn projected_error_covariance<T: Real>(
    c: &DMatrix<T>,
    noise: &DMatrix<T>,
) -> Result<(DMatrix<T>, T)> {
    let (p, r) = c.shape();
    if noise.shape() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "noise covariance is {}x{}, expected {p}x{p}",
            noise.nrows(),
            noise.ncols()
        )));
    }
    ensure_finite(c)?;
    ensure_finite(noise)?;
    let mut sym = noise.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|&l| !(l > T::zero())) {
        return Err(Error::SingularNoise);
    }
    let inv_sqrt = DVector::from_iterator(p, eig.eigenvalues.iter().map(|&l| T::one() / l.sqrt()));
    let q = &eig.eigenvectors;
    let whitening = q * DMatrix::from_diagonal(&inv_sqrt) * q.transpose();
    let a = &whitening * c;

    let svd = thin_svd(&a)?;
    let mut cov = if p <= r {
        let inner = checked_cholesky(&a * a.transpose(), None).ok_or(Error::SingularInformation)?;
        let u = svd.u;
        u.tr_mul(&inner.inverse()) * u
    } else {
        let inner = checked_cholesky(a.tr_mul(&a), None).ok_or(Error::SingularInformation)?;
        let v_t = svd.v_t;
        &v_t * inner.inverse() * v_t.transpose()
    };
    symmetrize(&mut cov);
    let logdet = checked_cholesky(cov.clone(), None)
        .ok_or(Error::SingularInformation)?
        .ln_determinant();
    Ok((cov, logdet))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn spd(p: usize, seed: u64) -> DMatrix<f64> {
        let a = gaussian(p, p + 3, seed);
        &a * a.transpose() + DMatrix::identity(p, p) * 0.1
    }

    #[test]
    fn identity_sensor_matrix_returns_measurement() {
        let y = DVector::from_vec(vec![0.3, -1.2, 2.5]);
        let c = DMatrix::<f64>::identity(3, 3);
        for kind in [EstimatorKind::Ls, EstimatorKind::Gls] {
            let est = Estimator::new(kind, c.clone(), Some(&spd(3, 1))).unwrap();
            assert!((est.estimate(&y).unwrap() - &y).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_recovery_is_exact() {
        let c = gaussian(12, 4, 3);
        let z = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let y = &c * &z;
        for kind in [EstimatorKind::Ls, EstimatorKind::Gls] {
            let est = Estimator::new(kind, c.clone(), Some(&spd(12, 4))).unwrap();
            let zt = est.estimate(&y).unwrap();
            assert!((zt - &z).norm() <= 1e-10 * z.norm());
        }
    }

    #[test]
    fn underdetermined_interpolates() {
        let c = gaussian(3, 6, 8);
        let y = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let ls = Estimator::new(EstimatorKind::Ls, c.clone(), None).unwrap().estimate(&y).unwrap();
        let gls =
            Estimator::new(EstimatorKind::Gls, c.clone(), Some(&spd(3, 2))).unwrap().estimate(&y).unwrap();
        assert!((&c * &ls - &y).norm() <= 1e-10 * y.norm());
        assert_eq!(ls, gls);
    }

    #[test]
    fn gls_matches_dense_normal_equations() {
        let c = gaussian(15, 4, 5);
        let r = spd(15, 6);
        let y = gaussian(15, 1, 7).column(0).into_owned();
        let est = Estimator::new(EstimatorKind::Gls, c.clone(), Some(&r)).unwrap();
        let z = est.estimate(&y).unwrap();
        let rinv = r.clone().try_inverse().unwrap();
        let lhs = c.transpose() * &rinv * &c;
        let rhs = c.transpose() * &rinv * &y;
        let oracle = lhs.lu().solve(&rhs).unwrap();
        assert!((&z - &oracle).norm() <= 1e-8 * oracle.norm());
    }

    #[test]
    fn gls_needs_noise_and_matching_dims() {
        let c = gaussian(5, 2, 1);
        assert!(Estimator::new(EstimatorKind::Gls, c.clone(), None).is_err());
        assert!(matches!(
            Estimator::new(EstimatorKind::Gls, c.clone(), Some(&spd(4, 1))),
            Err(Error::DimensionMismatch(_))
        ));
        let est = Estimator::new(EstimatorKind::Ls, c, None).unwrap();
        assert!(est.estimate(&DVector::zeros(4)).is_err());
    }

    #[test]
    fn singular_sensor_matrix_rejected() {
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        assert!(matches!(
            Estimator::new(EstimatorKind::Ls, c, None),
            Err(Error::SingularInformation)
        ));
    }

    fn toy_rom() -> ReducedOrderModel<f64> {
        let x = SnapshotMatrix::new(gaussian(10, 6, 21)).unwrap();
        crate::rom::fit_rom(&x, 3, false).unwrap().0
    }

    #[test]
    fn reconstruct_basics() {
        let rom = toy_rom();
        assert_eq!(reconstruct(&rom, &DVector::zeros(3)).unwrap(), DVector::zeros(10));
        let e1 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert_eq!(reconstruct(&rom, &e1).unwrap(), rom.modes().column(1).into_owned());
        assert!(reconstruct(&rom, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn reconstruction_error_bounds() {
        let rom = toy_rom();
        let xr = rom.modes() * rom.states();
        let x = SnapshotMatrix::new(xr).unwrap();
        assert!(reconstruction_error(&x, &rom, &rom.states()).unwrap() < 1e-14);
        let zero = DMatrix::zeros(3, 6);
        assert_relative_eq!(reconstruction_error(&x, &rom, &zero).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn reconstruction_error_matches_naive_loop() {
        let rom = toy_rom();
        let x = SnapshotMatrix::new(gaussian(10, 6, 33)).unwrap();
        let z = gaussian(3, 6, 34);
        let recon = rom.modes() * &z;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for i in 0..10 {
            for j in 0..6 {
                num += (x.values()[(i, j)] - recon[(i, j)]).powi(2);
                den += x.values()[(i, j)].powi(2);
            }
        }
        assert_relative_eq!(
            reconstruction_error(&x, &rom, &z).unwrap(),
            (num / den).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn projected_covariance_identity() {
        let eye = DMatrix::<f64>::identity(3, 3);
        let (cov, logdet) = projected_error_covariance(&eye, &eye).unwrap();
        assert!((cov - &eye).norm() < 1e-12);
        assert!(logdet.abs() < 1e-12);
    }

    #[test]
    fn projected_covariance_logdets() {
        // Overdetermined: −log det(Cᵀ R⁻¹ C).
        let c = gaussian(9, 3, 41);
        let r = spd(9, 42);
        let (cov, logdet) = projected_error_covariance(&c, &r).unwrap();
        assert_eq!(cov.shape(), (3, 3));
        let info = c.transpose() * r.clone().try_inverse().unwrap() * &c;
        assert_relative_eq!(logdet, -info.determinant().ln(), max_relative = 1e-9);

        // Underdetermined: −log det(R⁻¹ C Cᵀ).
        let c = gaussian(3, 6, 43);
        let r = spd(3, 44);
        let (cov, logdet) = projected_error_covariance(&c, &r).unwrap();
        assert_eq!(cov.shape(), (3, 3));
        let m = r.clone().try_inverse().unwrap() * &c * c.transpose();
        assert_relative_eq!(logdet, -m.determinant().ln(), max_relative = 1e-9);
    }

    #[test]
    fn projected_covariance_rejects_indefinite_noise() {
        let c = DMatrix::<f64>::identity(2, 2);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(projected_error_covariance(&c, &r), Err(Error::SingularNoise)));
    }
}
