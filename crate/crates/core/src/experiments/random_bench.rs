use nalgebra::{DMatrix, QR};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fmt_f64, TAG_DATASET};
use crate::error::{Error, Result};
use crate::estimation::{reconstruction_error, Estimator, EstimatorKind};
use crate::linalg::select_rows;
use crate::rng::job_rng;
use crate::rom::{fit_rom, NoiseFactor, ReducedOrderModel, SnapshotMatrix};
use crate::scalar::Real;
use crate::selection::{select_dg, select_dgnc, SensorSet};

/// Singular-value schedule of the synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SigmaRule {
    /// `(m + 1 − j) / m` for `j = 1..m`.
    Linear,
    /// As `Linear`, with every entry past the first `keep` set to zero.
    LinearTruncated { keep: usize },
    /// `ratio^(j − 1)` for `j = 1..m`.
    Geometric { ratio: f64 },
}

impl SigmaRule {
    pub fn validate(&self) -> Result<()> {
        if let SigmaRule::Geometric { ratio } = *self {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Error::InvalidConfig(format!("geometric ratio must be in (0, 1], got {ratio}")));
            }
        }
        Ok(())
    }

    pub fn values(&self, m: usize) -> Vec<f64> {
        let mf = m as f64;
        (1..=m)
            .map(|j| {
                let v = (mf + 1.0 - j as f64) / mf;
                match *self {
                    SigmaRule::Linear => v,
                    SigmaRule::LinearTruncated { keep } => {
                        if j <= keep {
                            v
                        } else {
                            0.0
                        }
                    }
                    SigmaRule::Geometric { ratio } => ratio.powi(j as i32 - 1),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBenchConfig {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub p_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub sigma_rule: SigmaRule,
}

impl Default for RandomBenchConfig {
    fn default() -> Self {
        Self {
            n: 500,
            m: 100,
            r: 10,
            p_list: (1..=20).collect(),
            trials: 100,
            seed: 0,
            sigma_rule: SigmaRule::Linear,
        }
    }
}

impl RandomBenchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n >= self.m && self.m > self.r && self.r >= 1) {
            return Err(Error::InvalidConfig(format!(
                "need n >= m > r >= 1, got n={} m={} r={}",
                self.n, self.m, self.r
            )));
        }
        self.sigma_rule.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.p_list.is_empty() || self.p_list.iter().any(|&p| p == 0 || p > self.n) {
            return Err(Error::InvalidConfig(format!("p values must lie in [1, {}]", self.n)));
        }
        Ok(())
    }
}

/// `rows x cols` matrix with orthonormal columns: the thin orthogonal QR
/// factor of a standard-normal matrix, signed so the triangular factor has a
/// nonnegative diagonal.
pub fn random_orthonormal<T: Real, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<T> {
    let g = DMatrix::<f64>::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols.min(rows) {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q.map(T::lit)
}

/// `X = U_X Σ_X V_Xᵀ` with random orthonormal factors; deterministic in
/// `(cfg.seed, trial)`.
pub fn generate_random_dataset<T: Real>(cfg: &RandomBenchConfig, trial: u64) -> Result<SnapshotMatrix<T>> {
    cfg.validate()?;
    let mut rng = job_rng(cfg.seed, &[TAG_DATASET, trial]);
    let ux = random_orthonormal::<f64, _>(&mut rng, cfg.n, cfg.m);
    let vx = random_orthonormal::<f64, _>(&mut rng, cfg.m, cfg.m);
    let sigma = cfg.sigma_rule.values(cfg.m);
    let mut scaled = ux;
    for (j, s) in sigma.iter().enumerate() {
        let mut col = scaled.column_mut(j);
        col *= *s;
    }
    SnapshotMatrix::new((scaled * vx.transpose()).map(T::lit))
}

/// Mean reconstruction error per sensor count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub p: usize,
    pub dg_ls: f64,
    pub dg_gls: f64,
    pub dgnc_ls: f64,
    pub dgnc_gls: f64,
    /// Trials where a selection or estimate failed; excluded from the means.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub const HEADER: &'static str = "p,dg_ls,dg_gls,dgnc_ls,dgnc_gls,failures";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.p,
                fmt_f64(r.dg_ls),
                fmt_f64(r.dg_gls),
                fmt_f64(r.dgnc_ls),
                fmt_f64(r.dgnc_gls),
                r.failures
            ));
        }
        out
    }

    pub fn row(&self, p: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.p == p)
    }
}

fn greedy_or_partial(result: Result<SensorSet>) -> Result<SensorSet> {
    match result {
        Ok(set) => Ok(set),
        Err(Error::SelectionAborted { partial, .. }) => Ok(*partial),
        Err(e) => Err(e),
    }
}

/// Errors `[ls, gls]` of estimating every instance of `x` from `set`.
pub(crate) fn evaluate_set<T: Real>(
    x: &SnapshotMatrix<T>,
    rom: &ReducedOrderModel<T>,
    noise: &NoiseFactor<T>,
    indices: &[usize],
    kinds: &[EstimatorKind],
) -> Result<Vec<T>> {
    let c = select_rows(rom.modes(), indices);
    let y = select_rows(x.values(), indices);
    let cov = noise.covariance_submatrix(indices)?;
    kinds
        .iter()
        .map(|&kind| {
            let est = Estimator::new(kind, c.clone(), Some(&cov))?;
            reconstruction_error(x, rom, &est.estimate_many(&y)?)
        })
        .collect()
}

fn run_trial<T: Real>(cfg: &RandomBenchConfig, trial: usize) -> Result<Vec<Option<[f64; 4]>>> {
    let x = generate_random_dataset::<T>(cfg, trial as u64)?;
    let (rom, noise) = fit_rom(&x, cfg.r, false)?;
    let p_max = *cfg.p_list.iter().max().expect("validated nonempty");
    // Greedy sets are nested, so one run to p_max serves every p.
    let dg = greedy_or_partial(select_dg(rom.modes(), p_max, &[]))?;
    let dgnc = greedy_or_partial(select_dgnc(rom.modes(), &noise, p_max, &[]))?;
    let kinds = [EstimatorKind::Ls, EstimatorKind::Gls];
    Ok(cfg
        .p_list
        .iter()
        .map(|&p| {
            if dg.len() < p || dgnc.len() < p {
                return None;
            }
            let a = evaluate_set(&x, &rom, &noise, &dg.indices[..p], &kinds).ok()?;
            let b = evaluate_set(&x, &rom, &noise, &dgnc.indices[..p], &kinds).ok()?;
            Some([a[0].as_f64(), a[1].as_f64(), b[0].as_f64(), b[1].as_f64()])
        })
        .collect())
}

/// Random-matrix benchmark: per trial, fit the model, run both greedy
/// selections, estimate with LS and GLS and average the reconstruction error.
///
/// Trials run in parallel; aggregation follows trial order.
pub fn run_random_benchmark<T: Real>(cfg: &RandomBenchConfig) -> Result<BenchTable> {
    cfg.validate()?;
    if cfg.p_list.iter().any(|&p| p > cfg.n) {
        return Err(Error::InvalidConfig("p exceeds candidate count".into()));
    }
    let per_trial: Vec<Vec<Option<[f64; 4]>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial::<T>(cfg, t))
        .collect::<Result<_>>()?;

    let rows = cfg
        .p_list
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut sums = [0.0f64; 4];
            let mut count = 0usize;
            for trial in &per_trial {
                if let Some(v) = trial[k] {
                    for (s, x) in sums.iter_mut().zip(v) {
                        *s += x;
                    }
                    count += 1;
                }
            }
            let mean = |s: f64| if count > 0 { s / count as f64 } else { f64::NAN };
            BenchRow {
                p,
                dg_ls: mean(sums[0]),
                dg_gls: mean(sums[1]),
                dgnc_ls: mean(sums[2]),
                dgnc_gls: mean(sums[3]),
                failures: cfg.trials - count,
            }
        })
        .collect();
    Ok(BenchTable { rows })
}
