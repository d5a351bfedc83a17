use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the numerical core is written against: `f32` or `f64`.
///
/// The associated constants carry the precision-dependent thresholds used by
/// the factorizations and the greedy admissibility test.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Relative threshold below which a projected row norm counts as zero.
    const RANK_TOL: f64;
    /// Relative threshold on the Schur complement `gamma / t`.
    const SCHUR_TOL: f64;
    /// Largest condition estimate accepted by the estimator factorizations.
    const COND_LIMIT: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const RANK_TOL: f64 = 1e-10;
    const SCHUR_TOL: f64 = 1e-12;
    const COND_LIMIT: f64 = 1e12;
}

impl Real for f32 {
    const RANK_TOL: f64 = 1e-5;
    const SCHUR_TOL: f64 = 1e-6;
    const COND_LIMIT: f64 = 1e6;
}
