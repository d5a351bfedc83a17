use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{filter_candidates, fmt_f64, TAG_FOLDS, TAG_RESAMPLE};
use crate::error::{Error, Result};
use crate::estimation::EstimatorKind;
use crate::linalg::{frobenius, select_columns};
use crate::rng::job_rng;
use crate::rom::{fit_rom, NoiseFactor, ReducedOrderModel, SnapshotMatrix};
use crate::scalar::Real;
use crate::selection::{select_dg, select_dgnc};

use super::random_bench::evaluate_set;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalConfig {
    pub folds: usize,
    pub resamples: usize,
    pub train_noise_sizes: Vec<usize>,
    pub p: usize,
    pub r: usize,
    pub seed: u64,
    /// Subtract the full-data column mean before fitting the model.
    pub center: bool,
    /// Optional noise-RMS pre-filter applied to each resampled noise model.
    pub filter_frac: Option<f64>,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        Self {
            folds: 6,
            resamples: 50,
            train_noise_sizes: vec![20, 60, 120, 200],
            p: 15,
            r: 10,
            seed: 0,
            center: true,
            filter_frac: None,
        }
    }
}

impl CrossvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidConfig("need at least 2 folds".into()));
        }
        if self.resamples == 0 {
            return Err(Error::InvalidConfig("need at least 1 resample".into()));
        }
        if self.p == 0 || self.r == 0 {
            return Err(Error::InvalidConfig("p and r must be positive".into()));
        }
        if self.train_noise_sizes.is_empty() || self.train_noise_sizes.contains(&0) {
            return Err(Error::InvalidConfig("train noise sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Column indices of one training/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..m` and cuts it into `folds` contiguous parts of near-equal
/// size; fold `k` tests on part `k` and trains on the rest.
pub fn split_folds(m: usize, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 || m < folds {
        return Err(Error::InvalidConfig(format!("cannot split {m} snapshots into {folds} folds")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut job_rng(seed, &[TAG_FOLDS]));
    let bounds: Vec<usize> = (0..=folds).map(|k| k * m / folds).collect();
    Ok((0..folds)
        .map(|k| {
            let mut test = order[bounds[k]..bounds[k + 1]].to_vec();
            let mut train: Vec<usize> =
                order[..bounds[k]].iter().chain(&order[bounds[k + 1]..]).copied().collect();
            test.sort_unstable();
            train.sort_unstable();
            Fold { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossvalRow {
    pub train_size: usize,
    pub mean_e: f64,
    pub min_e: f64,
    pub max_e: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossvalTable {
    pub rows: Vec<CrossvalRow>,
    /// Mean test error of DG selection with LS estimation over the folds.
    pub dg_ls_mean_e: f64,
    /// `‖X − U Uᵀ X‖_F / ‖X‖_F` on the (centered) data.
    pub modeling_e: f64,
}

impl CrossvalTable {
    pub const HEADER: &'static str = "train_size,mean_e,min_e,max_e,failures,dg_ls_mean_e,modeling_e";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.train_size,
                fmt_f64(r.mean_e),
                fmt_f64(r.min_e),
                fmt_f64(r.max_e),
                r.failures,
                fmt_f64(self.dg_ls_mean_e),
                fmt_f64(self.modeling_e)
            ));
        }
        out
    }
}

struct Prepared<T: Real> {
    data: SnapshotMatrix<T>,
    rom: ReducedOrderModel<T>,
    folds: Vec<Fold>,
    tests: Vec<SnapshotMatrix<T>>,
}

fn prepare<T: Real>(x: &SnapshotMatrix<T>, cfg: &CrossvalConfig) -> Result<Prepared<T>> {
    cfg.validate()?;
    let m = x.instances();
    let folds = split_folds(m, cfg.folds, cfg.seed)?;
    let min_train = folds.iter().map(|f| f.train.len()).min().unwrap_or(0);
    if let Some(&size) = cfg.train_noise_sizes.iter().find(|&&s| s > min_train) {
        return Err(Error::InsufficientSnapshots { requested: size, available: min_train });
    }

    let mut values = x.values().clone();
    if cfg.center {
        let mean = values.column_mean();
        for mut col in values.column_iter_mut() {
            col -= &mean;
        }
    }
    let data = SnapshotMatrix::new(values)?;
    let (rom, _) = fit_rom(&data, cfg.r, false)?;
    let tests = folds
        .iter()
        .map(|f| data.columns(&f.test))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared { data, rom, folds, tests })
}

fn resample_error<T: Real>(
    prep: &Prepared<T>,
    cfg: &CrossvalConfig,
    fold: usize,
    size_idx: usize,
    resample: usize,
) -> Result<f64> {
    let train = &prep.folds[fold].train;
    let size = cfg.train_noise_sizes[size_idx];
    let mut rng = job_rng(cfg.seed, &[TAG_RESAMPLE, fold as u64, size_idx as u64, resample as u64]);
    let mut picks: Vec<usize> =
        rand::seq::index::sample(&mut rng, train.len(), size).into_iter().map(|k| train[k]).collect();
    picks.sort_unstable();

    let u = prep.rom.modes();
    let sample = select_columns(prep.data.values(), &picks);
    let residual = &sample - u * u.tr_mul(&sample);
    let noise = NoiseFactor::from_residual(&residual, None)?;
    let excluded = match cfg.filter_frac {
        Some(frac) => filter_candidates(&noise, frac)?,
        None => Vec::new(),
    };
    let set = select_dgnc(u, &noise, cfg.p, &excluded)?;
    let e = evaluate_set(&prep.tests[fold], &prep.rom, &noise, &set.indices, &[EstimatorKind::Gls])?;
    Ok(e[0].as_f64())
}

/// Cross-validates the data-driven noise model.
///
/// The spatial modes are fixed from all snapshots. For every fold, training
/// noise size and resample, the noise covariance is rebuilt from the residual
/// `(I − U Uᵀ) X_sample` of a random subset of the training snapshots,
/// sensors are chosen by [`select_dgnc`], and the test snapshots are
/// reconstructed by GLS.
pub fn run_crossval<T: Real>(x: &SnapshotMatrix<T>, cfg: &CrossvalConfig) -> Result<CrossvalTable> {
    let prep = prepare(x, cfg)?;

    let u = prep.rom.modes();
    let modeling = {
        let d = prep.data.values();
        let resid: DMatrix<T> = d - u * u.tr_mul(d);
        (frobenius(&resid) / frobenius(d)).as_f64()
    };

    // The DG+LS baseline does not depend on the fold's noise model.
    let dg = select_dg(u, cfg.p, &[])?;
    let white = NoiseFactor::white(u.nrows(), T::one())?;
    let mut dg_sum = 0.0;
    for test in &prep.tests {
        dg_sum += evaluate_set(test, &prep.rom, &white, &dg.indices, &[EstimatorKind::Ls])?[0].as_f64();
    }
    let dg_ls_mean_e = dg_sum / prep.folds.len() as f64;

    let sizes = cfg.train_noise_sizes.len();
    let jobs: Vec<(usize, usize, usize)> = (0..prep.folds.len())
        .flat_map(|f| (0..sizes).flat_map(move |s| (0..cfg.resamples).map(move |r| (f, s, r))))
        .collect();
    let results: Vec<Result<f64>> =
        jobs.par_iter().map(|&(f, s, r)| resample_error(&prep, cfg, f, s, r)).collect();

    let mut rows = Vec::with_capacity(sizes);
    for (s, &train_size) in cfg.train_noise_sizes.iter().enumerate() {
        let mut errors = Vec::new();
        let mut failures = 0;
        for (job, res) in jobs.iter().zip(&results) {
            if job.1 != s {
                continue;
            }
            match res {
                Ok(e) => errors.push(*e),
                Err(err) if err.class() == crate::error::ErrorClass::Numerical => failures += 1,
                Err(err) => return Err(Error::InvalidConfig(err.to_string())),
            }
        }
        let mean = if errors.is_empty() {
            f64::NAN
        } else {
            errors.iter().sum::<f64>() / errors.len() as f64
        };
        rows.push(CrossvalRow {
            train_size,
            mean_e: mean,
            min_e: errors.iter().copied().fold(f64::INFINITY, f64::min),
            max_e: errors.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            failures,
        });
    }
    Ok(CrossvalTable { rows, dg_ls_mean_e, modeling_e: modeling })
}
