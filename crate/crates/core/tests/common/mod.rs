#![allow(dead_code)]

use corrsense::experiments::random_orthonormal;
use corrsense::rng::job_rng;
use corrsense::{Matrix, NoiseFactor};
use rand::Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub modes: Matrix,
    pub noise: NoiseFactor,
}

/// Orthonormal modes plus a Gaussian low-rank noise factor with a ridge of
/// a tenth of the mean factor variance.
pub fn instance(seed: u64, n: usize, r: usize, q: usize) -> Instance {
    let mut rng = job_rng(seed, &[0xC0FFEE]);
    let modes = random_orthonormal::<f64, _>(&mut rng, n, r);
    let factor = Matrix::from_fn(n, q, |_, _| rng.sample::<f64, _>(StandardNormal) / (n as f64).sqrt());
    let ridge = 0.1 * factor.norm_squared() / n as f64 + 1e-3;
    let noise = NoiseFactor::new(factor, ridge).unwrap();
    Instance { modes, noise }
}

/// Instance with sizes drawn from `n ≤ 40`, `r ≤ 6`, `q ≤ 15`.
pub fn sized_instance(seed: u64) -> Instance {
    let mut rng = job_rng(seed, &[0x517E]);
    let r = rng.random_range(1..=6);
    let n = rng.random_range((r + 8).max(12)..=40);
    let q = rng.random_range(1..=15);
    instance(seed, n, r, q)
}

pub fn gaussian(seed: u64, rows: usize, cols: usize) -> Matrix {
    let mut rng = job_rng(seed, &[0x6A55]);
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Symmetric positive definite `p x p` matrix `G Gᵀ / p + I/10`.
pub fn spd(seed: u64, p: usize) -> Matrix {
    let g = gaussian(seed, p, p + 2);
    &g * g.transpose() / p as f64 + Matrix::identity(p, p) * 0.1
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
