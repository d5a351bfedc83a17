//! Seeded experiment harnesses: the random-matrix benchmark, candidate
//! pre-filtering and the noise-model cross-validation.

mod crossval;
mod filter;
mod random_bench;

pub use crossval::{run_crossval, split_folds, CrossvalConfig, CrossvalRow, CrossvalTable, Fold};
pub use filter::filter_candidates;
pub use random_bench::{
    generate_random_dataset, random_orthonormal, run_random_benchmark, BenchRow, BenchTable,
    RandomBenchConfig, SigmaRule,
};

// Job-key tags for `rng::job_rng`.
const TAG_DATASET: u64 = 1;
const TAG_FOLDS: u64 = 2;
const TAG_RESAMPLE: u64 = 3;

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}
