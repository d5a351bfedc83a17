use itertools::Itertools;
use nalgebra::DMatrix;
use serde::Serialize;

use super::sensor_set::{Algorithm, SensorSet};
use crate::error::{Error, Result};
use crate::linalg::{checked_cholesky, select_rows};
use crate::rom::NoiseFactor;
use crate::scalar::Real;

/// Default cap on the number of subsets [`exhaustive_oracle`] evaluates.
pub const DEFAULT_ORACLE_BUDGET: u128 = 2_000_000;

/// Dense log-determinant objective of `indices`.
///
/// `log det(R_S⁻¹ C_S C_Sᵀ)` for `|S| ≤ r`, `log det(C_Sᵀ R_S⁻¹ C_S)` for
/// `|S| > r`. `noise = None` means `R = I`. No incremental state is used.
pub fn objective_det<T: Real>(
    modes: &DMatrix<T>,
    noise: Option<&NoiseFactor<T>>,
    indices: &[usize],
) -> Result<T> {
    let (n, r) = modes.shape();
    if indices.is_empty() {
        return Err(Error::InvalidConfig("objective needs a nonempty sensor set".into()));
    }
    SensorSet::manual(n, r, indices.to_vec())?;
    let c = select_rows(modes, indices);
    let p = indices.len();
    let cov = match noise {
        Some(nf) => {
            if nf.candidates() != n {
                return Err(Error::DimensionMismatch(format!(
                    "noise factor has {} rows, modes have {n}",
                    nf.candidates()
                )));
            }
            nf.covariance_submatrix(indices)?
        }
        None => DMatrix::identity(p, p),
    };
    let noise_chol = checked_cholesky(cov, None).ok_or(Error::SingularNoise)?;
    if p <= r {
        let gram = &c * c.transpose();
        let gram_chol = checked_cholesky(gram, None).ok_or(Error::SingularInformation)?;
        Ok(gram_chol.ln_determinant() - noise_chol.ln_determinant())
    } else {
        let info = c.tr_mul(&noise_chol.solve(&c));
        let info_chol = checked_cholesky(info, None).ok_or(Error::SingularInformation)?;
        Ok(info_chol.ln_determinant())
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Best `p`-subset by exhaustive enumeration, ties broken lexicographically.
///
/// Subsets with a singular objective matrix are skipped. The returned trace
/// holds the single optimal objective value.
pub fn exhaustive_oracle<T: Real>(
    modes: &DMatrix<T>,
    noise: Option<&NoiseFactor<T>>,
    p: usize,
    budget: u128,
) -> Result<SensorSet> {
    let (n, r) = modes.shape();
    if p == 0 || p > n {
        return Err(Error::InvalidConfig(format!("cannot choose {p} of {n} candidates")));
    }
    let needed = binomial(n, p);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    for subset in (0..n).combinations(p) {
        let value = match objective_det(modes, noise, &subset) {
            Ok(v) => v,
            Err(Error::SingularNoise | Error::SingularInformation) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, subset));
        }
    }
    let (value, indices) = best.ok_or(Error::SingularInformation)?;
    Ok(SensorSet { n, r, algorithm: Algorithm::Oracle, indices, objective_trace: vec![value.as_f64()] })
}

/// The three-candidate, rank-one instance whose correlated noise makes the
/// determinant objective neither submodular nor supermodular.
pub fn counterexample_instance<T: Real>() -> (DMatrix<T>, NoiseFactor<T>) {
    let modes = DMatrix::from_row_slice(3, 1, &[T::lit(0.1), T::one(), T::one()]);
    let cov = DMatrix::from_row_slice(
        3,
        3,
        &[1.0, -0.1, 0.1, -0.1, 0.8, 0.7, 0.1, 0.7, 2.0].map(T::lit),
    );
    let noise = NoiseFactor::from_covariance(&cov, T::zero())
        .expect("counterexample covariance is positive definite");
    (modes, noise)
}

/// Marginal gains of the raw determinant objective `f_S = exp(objective)`
/// on a three-candidate instance (candidates numbered from one).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubmodularityReport {
    /// `f{1,2} − f{1}`
    pub gain_2_given_1: f64,
    /// `f{1,2,3} − f{1,3}`
    pub gain_2_given_13: f64,
    /// `f{1,3} − f{3}`
    pub gain_1_given_3: f64,
    /// `f{1,2,3} − f{2,3}`
    pub gain_1_given_23: f64,
}

impl SubmodularityReport {
    /// Adding 2 gains more to the smaller set, which supermodularity forbids.
    pub fn violates_supermodularity(&self) -> bool {
        self.gain_2_given_1 > self.gain_2_given_13
    }

    /// Adding 1 gains more to the larger set, which submodularity forbids.
    pub fn violates_submodularity(&self) -> bool {
        self.gain_1_given_3 < self.gain_1_given_23
    }
}

/// Evaluates the four marginal gains of [`SubmodularityReport`].
pub fn check_submodularity<T: Real>(
    modes: &DMatrix<T>,
    noise: Option<&NoiseFactor<T>>,
) -> Result<SubmodularityReport> {
    if modes.nrows() != 3 {
        return Err(Error::DimensionMismatch("submodularity check needs 3 candidates".into()));
    }
    let f = |s: &[usize]| -> Result<f64> { Ok(objective_det(modes, noise, s)?.as_f64().exp()) };
    Ok(SubmodularityReport {
        gain_2_given_1: f(&[0, 1])? - f(&[0])?,
        gain_2_given_13: f(&[0, 1, 2])? - f(&[0, 2])?,
        gain_1_given_3: f(&[0, 2])? - f(&[2])?,
        gain_1_given_23: f(&[0, 1, 2])? - f(&[1, 2])?,
    })
}

pub fn check_submodularity_counterexample() -> SubmodularityReport {
    let (modes, noise) = counterexample_instance::<f64>();
    check_submodularity(&modes, Some(&noise)).expect("counterexample objective is well defined")
}
