use crate::error::{Error, Result};
use crate::rom::NoiseFactor;
use crate::scalar::Real;

/// Candidates whose noise RMS `‖row_i(N)‖` falls below `threshold_frac` times
/// the largest RMS, in increasing index order.
pub fn filter_candidates<T: Real>(noise: &NoiseFactor<T>, threshold_frac: f64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&threshold_frac) {
        return Err(Error::InvalidConfig(format!(
            "threshold fraction must be in [0, 1), got {threshold_frac}"
        )));
    }
    let n = noise.candidates();
    let rms: Vec<T> = (0..n)
        .map(|i| noise.raw_variance(i).map(|v| v.sqrt()))
        .collect::<Result<_>>()?;
    let max = rms.iter().fold(T::zero(), |a, &b| a.max(b));
    let cutoff = T::lit(threshold_frac) * max;
    let excluded: Vec<usize> = (0..n).filter(|&i| rms[i] < cutoff).collect();
    if excluded.len() == n {
        return Err(Error::AllCandidatesExcluded);
    }
    Ok(excluded)
}
