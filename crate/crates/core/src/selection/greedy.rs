use nalgebra::DMatrix;
use rayon::prelude::*;

use super::sensor_set::{Algorithm, SensorSet};
use super::state::SelectionState;
use crate::error::{Error, Result};
use crate::linalg::{dot, row_major};
use crate::rom::NoiseFactor;
use crate::scalar::Real;

/// Greedy selection maximizing the noise-weighted determinant objective.
///
/// Step `k` adds the admissible candidate with the largest gain; ties go to
/// the smallest index. Candidates whose Schur complement collapses are
/// skipped for that step only. If no candidate is admissible the run aborts
/// with [`Error::SelectionAborted`] carrying the sensors chosen so far.
pub fn select_dgnc<T: Real>(
    modes: &DMatrix<T>,
    noise: &NoiseFactor<T>,
    p: usize,
    excluded: &[usize],
) -> Result<SensorSet> {
    if noise.candidates() != modes.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "noise factor has {} rows, modes have {}",
            noise.candidates(),
            modes.nrows()
        )));
    }
    Greedy::new(modes, Some(noise), p, excluded)?.run()
}

/// Greedy selection maximizing `det(C Cᵀ)` then `det(Cᵀ C)`: [`select_dgnc`]
/// with identity noise covariance.
pub fn select_dg<T: Real>(modes: &DMatrix<T>, p: usize, excluded: &[usize]) -> Result<SensorSet> {
    Greedy::new(modes, None, p, excluded)?.run()
}

struct Greedy<'a, T: Real> {
    n: usize,
    r: usize,
    p: usize,
    noise: Option<&'a NoiseFactor<T>>,
    unit_rows: Vec<T>,
    variances: Vec<T>,
    available: Vec<bool>,
    // Row-major n x p: entry (i, k) is the noise covariance between candidate
    // i and the k-th selected sensor.
    cross: Vec<T>,
}

#[derive(Clone, Copy)]
struct Scored<T> {
    gain: T,
    index: usize,
}

impl<T: Real> Scored<T> {
    fn better(a: Self, b: Self) -> Self {
        if a.gain > b.gain || (a.gain == b.gain && a.index < b.index) {
            a
        } else {
            b
        }
    }
}

impl<'a, T: Real> Greedy<'a, T> {
    fn new(
        modes: &DMatrix<T>,
        noise: Option<&'a NoiseFactor<T>>,
        p: usize,
        excluded: &[usize],
    ) -> Result<Self> {
        let (n, r) = modes.shape();
        if r == 0 || n == 0 {
            return Err(Error::Empty { rows: n, cols: r });
        }
        crate::linalg::ensure_finite(modes)?;
        let mut available = vec![true; n];
        for &i in excluded {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            available[i] = false;
        }
        let open = available.iter().filter(|&&a| a).count();
        if p == 0 || p > open {
            return Err(Error::InvalidConfig(format!(
                "cannot select {p} sensors from {open} available candidates"
            )));
        }
        let variances = match noise {
            Some(nf) => (0..n).map(|i| nf.variance(i)).collect::<Result<Vec<_>>>()?,
            None => vec![T::one(); n],
        };
        Ok(Self {
            n,
            r,
            p,
            noise,
            unit_rows: row_major(modes),
            variances,
            available,
            cross: vec![T::zero(); n * p],
        })
    }

    fn mode_row(&self, i: usize) -> &[T] {
        &self.unit_rows[i * self.r..(i + 1) * self.r]
    }

    fn cross_row(&self, i: usize, len: usize) -> &[T] {
        &self.cross[i * self.p..i * self.p + len]
    }

    fn algorithm(&self) -> Algorithm {
        if self.noise.is_some() {
            Algorithm::Dgnc
        } else {
            Algorithm::Dg
        }
    }

    fn run(mut self) -> Result<SensorSet> {
        let mut state = SelectionState::new(self.r);
        let mut trace = Vec::with_capacity(self.p);
        for step in 0..self.p {
            let k = state.len();
            let best = (0..self.n)
                .into_par_iter()
                .filter(|&i| self.available[i])
                .filter_map(|i| {
                    let gain =
                        state.gain(self.mode_row(i), self.cross_row(i, k), self.variances[i]).ok()?;
                    gain.is_finite().then_some(Scored { gain, index: i })
                })
                .reduce_with(Scored::better);

            let Some(best) = best else {
                return Err(Error::SelectionAborted {
                    step: step + 1,
                    partial: Box::new(SensorSet {
                        n: self.n,
                        r: self.r,
                        algorithm: self.algorithm(),
                        indices: state.indices().to_vec(),
                        objective_trace: trace,
                    }),
                });
            };

            let chosen = best.index;
            state.push(
                chosen,
                self.mode_row(chosen),
                self.cross_row(chosen, k),
                self.variances[chosen],
            )?;
            self.available[chosen] = false;
            trace.push(state.objective().as_f64());

            if let Some(nf) = self.noise {
                if nf.rank() > 0 && step + 1 < self.p {
                    let pivot = nf.row(chosen);
                    let stride = self.p;
                    self.cross.par_chunks_mut(stride).enumerate().for_each(|(i, row)| {
                        row[k] = dot(nf.row(i), pivot);
                    });
                }
            }
        }
        Ok(SensorSet {
            n: self.n,
            r: self.r,
            algorithm: self.algorithm(),
            indices: state.indices().to_vec(),
            objective_trace: trace,
        })
    }
}
