//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Run with `cargo test -p corrsense-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{gaussian, instance, rel_diff, sized_instance, spd};
use corrsense::estimation::EstimatorKind;
use corrsense::experiments::{
    generate_random_dataset, run_crossval, run_random_benchmark, CrossvalConfig, RandomBenchConfig, SigmaRule,
};
use corrsense::rom::fit_rom;
use corrsense::selection::{
    check_submodularity_counterexample, exhaustive_oracle, objective_det, select_dg, select_dgnc, Phase,
    DEFAULT_ORACLE_BUDGET,
};
use corrsense::{Estimator, NoiseFactor, SelectionState, Vector};

const COUNTEREXAMPLE: [f64; 4] = [1.2913, 0.8038, 0.0025, 0.0450];
const COUNTEREXAMPLE_TOL: f64 = 5e-5;
const GAIN_REL_TOL: f64 = 1e-8;
const GLS_ORACLE_TOL: f64 = 1e-8;
const RECOVERY_TOL: f64 = 1e-10;
const INTERPOLATION_TOL: f64 = 1e-10;
const ORACLE_SLACK: f64 = 1e-12;
const STRICT_GAP: f64 = 1e-9;
/// Allowed `t(4000) / t(1000)`; exact linear scaling gives 4.
const SCALING_LIMIT: f64 = 6.0;
const TIMING_REPEATS: usize = 5;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn counterexample() -> Outcome {
    let start = Instant::now();
    let rep = check_submodularity_counterexample();
    let got = [rep.gain_2_given_1, rep.gain_2_given_13, rep.gain_1_given_3, rep.gain_1_given_23];
    for (g, want) in got.iter().zip(COUNTEREXAMPLE) {
        ensure((g - want).abs() <= COUNTEREXAMPLE_TOL, || format!("{got:?} vs {COUNTEREXAMPLE:?}"))?;
    }
    ensure(rep.violates_supermodularity(), || "gain of 2 does not shrink with 3 present".into())?;
    ensure(rep.violates_submodularity(), || "gain of 1 does not grow with 2 present".into())?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("gains {:.4} {:.4} {:.4} {:.4}", got[0], got[1], got[2], got[3]))
}

fn rank_one_consistency() -> Outcome {
    let start = Instant::now();
    let mut checked = [0usize; 2];
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let inst = sized_instance(seed);
        let (n, r) = inst.modes.shape();
        let mut state = SelectionState::new(r);
        let mut selected: Vec<usize> = Vec::new();
        let order: Vec<usize> = (0..(r + 4).min(n - 1)).map(|k| (k * 7 + seed as usize) % n).collect();
        for next in order {
            if selected.contains(&next) {
                continue;
            }
            let base = match selected.is_empty() {
                true => 0.0,
                false => objective_det(&inst.modes, Some(&inst.noise), &selected).unwrap(),
            };
            for cand in (0..n).filter(|c| !selected.contains(c)) {
                let row: Vec<f64> = inst.modes.row(cand).iter().copied().collect();
                let s: Vec<f64> = inst.noise.cross(cand, &selected).unwrap().iter().copied().collect();
                let gain = state.gain(&row, &s, inst.noise.variance(cand).unwrap()).unwrap();
                let mut with = selected.clone();
                with.push(cand);
                let dense = (objective_det(&inst.modes, Some(&inst.noise), &with).unwrap() - base).exp();
                let predicted = match state.phase() {
                    Phase::Underdetermined => gain,
                    Phase::Overdetermined => 1.0 + gain,
                };
                worst = worst.max(rel_diff(dense, predicted));
                checked[(state.phase() == Phase::Overdetermined) as usize] += 1;
            }
            let row: Vec<f64> = inst.modes.row(next).iter().copied().collect();
            let s: Vec<f64> = inst.noise.cross(next, &selected).unwrap().iter().copied().collect();
            state.push(next, &row, &s, inst.noise.variance(next).unwrap()).unwrap();
            selected.push(next);
        }
    }
    ensure(worst <= GAIN_REL_TOL, || format!("worst relative difference {worst:e}"))?;
    ensure(checked[0] > 0 && checked[1] > 0, || format!("phases not both exercised: {checked:?}"))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{} under-, {} overdetermined gains, worst rel {worst:.1e}", checked[0], checked[1]))
}

fn reduction() -> Outcome {
    let start = Instant::now();
    for seed in 0..50u64 {
        let inst = sized_instance(1000 + seed);
        let (n, r) = inst.modes.shape();
        let p = (r + 5).min(n);
        let white = NoiseFactor::white(n, 1.0).unwrap();
        let a = select_dgnc(&inst.modes, &white, p, &[]).unwrap();
        let b = select_dg(&inst.modes, p, &[]).unwrap();
        ensure(a.indices == b.indices, || format!("seed {seed}: {:?} vs {:?}", a.indices, b.indices))?;
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok("50 instances identical".into())
}

fn scale_invariance() -> Outcome {
    for seed in 0..20u64 {
        let inst = sized_instance(2000 + seed);
        let p = inst.modes.ncols() + 4;
        let base = select_dgnc(&inst.modes, &inst.noise, p, &[]).unwrap();
        for c in [1e-3, 1.0, 1e3] {
            let set = select_dgnc(&inst.modes, &inst.noise.scaled(c).unwrap(), p, &[]).unwrap();
            ensure(set.indices == base.indices, || format!("seed {seed} scale {c}"))?;
        }
    }
    Ok("20 instances x 3 scales identical".into())
}

fn monotonicity() -> Outcome {
    let mut steps = 0;
    for seed in 0..50u64 {
        let inst = sized_instance(3000 + seed);
        let (n, r) = inst.modes.shape();
        let p = (2 * r + 6).min(n);
        let trace = select_dgnc(&inst.modes, &inst.noise, p, &[]).unwrap().objective_trace;
        for k in r..p {
            ensure(trace[k] > trace[k - 1], || format!("seed {seed} step {k}: {trace:?}"))?;
            steps += 1;
        }
    }
    Ok(format!("{steps} overdetermined steps strictly increasing"))
}

fn oracle_checks() -> Outcome {
    let mut strictly_worse = 0;
    for seed in 0..50u64 {
        let inst = instance(4000 + seed, 10 + (seed as usize % 3), 1 + seed as usize % 3, 6);
        let r = inst.modes.ncols();
        let single = exhaustive_oracle(&inst.modes, Some(&inst.noise), 1, DEFAULT_ORACLE_BUDGET).unwrap();
        let first = select_dgnc(&inst.modes, &inst.noise, 1, &[]).unwrap();
        ensure(first.indices == single.indices, || format!("seed {seed}: first pick differs"))?;
        for p in [r, r + 1, r + 2] {
            let greedy = select_dgnc(&inst.modes, &inst.noise, p, &[]).unwrap();
            let g = objective_det(&inst.modes, Some(&inst.noise), &greedy.indices).unwrap();
            let o = exhaustive_oracle(&inst.modes, Some(&inst.noise), p, DEFAULT_ORACLE_BUDGET).unwrap().objective_trace[0];
            ensure(o >= g - ORACLE_SLACK, || format!("seed {seed} p {p}: oracle {o} < greedy {g}"))?;
            if o > g + STRICT_GAP {
                strictly_worse += 1;
            }
        }
    }
    ensure(strictly_worse > 0, || "greedy optimal everywhere".into())?;
    Ok(format!("greedy strictly suboptimal in {strictly_worse} of 150 cases"))
}

fn estimators() -> Outcome {
    let (mut gls, mut rec, mut interp) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..20u64 {
        let (p, r) = (10, 3);
        let c = gaussian(seed, p, r);
        let cov = spd(50 + seed, p);
        let y = Vector::from_column_slice(gaussian(90 + seed, p, 1).as_slice());
        let r_inv = cov.clone().try_inverse().unwrap();
        let oracle = (c.transpose() * &r_inv * &c).lu().solve(&(c.transpose() * &r_inv * &y)).unwrap();
        let z = Estimator::new(EstimatorKind::Gls, c, Some(&cov)).unwrap().estimate(&y).unwrap();
        gls = gls.max((&z - &oracle).norm() / oracle.norm());

        let c = gaussian(seed, 8, 5);
        let z = gaussian(seed + 30, 5, 3);
        let y = &c * &z;
        for kind in [EstimatorKind::Ls, EstimatorKind::Gls] {
            let est = Estimator::new(kind, c.clone(), Some(&spd(seed, 8))).unwrap().estimate_many(&y).unwrap();
            rec = rec.max((&est - &z).amax() / z.amax().max(1.0));
        }

        let p = 1 + seed as usize % 6;
        let c = gaussian(seed + 300, p, 6);
        let y = Vector::from_column_slice(gaussian(seed + 400, p, 1).as_slice());
        for kind in [EstimatorKind::Ls, EstimatorKind::Gls] {
            let z = Estimator::new(kind, c.clone(), Some(&spd(seed + 500, p))).unwrap().estimate(&y).unwrap();
            interp = interp.max((&c * z - &y).norm() / y.norm().max(1.0));
        }
    }
    ensure(gls <= GLS_ORACLE_TOL, || format!("GLS vs normal equations {gls:e}"))?;
    ensure(rec <= RECOVERY_TOL, || format!("noiseless recovery {rec:e}"))?;
    ensure(interp <= INTERPOLATION_TOL, || format!("interpolation residual {interp:e}"))?;
    Ok(format!("gls {gls:.1e}, recovery {rec:.1e}, interpolation {interp:.1e}"))
}

fn random_benchmark() -> Outcome {
    let start = Instant::now();
    let cfg = RandomBenchConfig::default();
    let table = run_random_benchmark::<f64>(&cfg).map_err(|e| e.to_string())?;
    let row = table.row(20).ok_or("no row for p=20")?;
    ensure(row.dgnc_gls <= row.dg_gls && row.dg_gls <= row.dg_ls, || format!("p=20 ordering broken: {row:?}"))?;
    for row in table.rows.iter().filter(|row| row.p > cfg.r) {
        ensure(row.dg_gls < row.dg_ls && row.dgnc_gls < row.dgnc_ls, || format!("GLS not better: {row:?}"))?;
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "p=20: dgnc+gls {:.4} <= dg+gls {:.4} <= dg+ls {:.4}",
        row.dgnc_gls, row.dg_gls, row.dg_ls
    ))
}

fn crossval() -> Outcome {
    let start = Instant::now();
    let gen = RandomBenchConfig {
        n: 800,
        m: 240,
        r: 10,
        p_list: vec![1],
        trials: 1,
        seed: 0,
        sigma_rule: SigmaRule::Geometric { ratio: 0.97 },
    };
    let x = generate_random_dataset::<f64>(&gen, 0).map_err(|e| e.to_string())?;
    let cfg = CrossvalConfig { resamples: 10, ..CrossvalConfig::default() };
    let table = run_crossval(&x, &cfg).map_err(|e| e.to_string())?;
    let means: Vec<f64> = table.rows.iter().map(|row| row.mean_e).collect();
    let inversions = means.windows(2).filter(|w| w[1] > w[0]).count();
    ensure(inversions <= 1, || format!("{inversions} inversions in {means:?}"))?;
    let last = *means.last().unwrap();
    ensure(last < table.dg_ls_mean_e, || format!("largest size {last} vs DG+LS {}", table.dg_ls_mean_e))?;
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(format!("means {means:.4?}, DG+LS {:.4}", table.dg_ls_mean_e))
}

fn median_select_time(n: usize) -> Duration {
    let gen = RandomBenchConfig { n, m: 100, r: 10, p_list: vec![20], trials: 1, seed: 1, sigma_rule: SigmaRule::Linear };
    let x = generate_random_dataset::<f64>(&gen, 0).unwrap();
    let (rom, noise) = fit_rom(&x, 10, false).unwrap();
    let mut times: Vec<Duration> = (0..TIMING_REPEATS)
        .map(|_| {
            in_pool(1, || {
                let start = Instant::now();
                select_dgnc(rom.modes(), &noise, 20, &[]).unwrap();
                start.elapsed()
            })
        })
        .collect();
    times.sort();
    times[TIMING_REPEATS / 2]
}

fn scaling() -> Outcome {
    let t: Vec<Duration> = [1000, 2000, 4000].map(median_select_time).to_vec();
    let ratio = t[2].as_secs_f64() / t[0].as_secs_f64();
    ensure(ratio <= SCALING_LIMIT, || format!("t(4000)/t(1000) = {ratio:.2}, times {t:?}"))?;
    Ok(format!("medians {:.2?} {:.2?} {:.2?}, ratio {ratio:.2}", t[0], t[1], t[2]))
}

fn run_cli(dir: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_corrsense"))
        .current_dir(dir)
        .args(args)
        .args(["--threads", &threads.to_string(), "--print-json"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    let name = format!("stdout_{}.json", args.iter().position(|a| *a == "--manifest-out").map_or("x", |i| args[i + 1]));
    std::fs::write(dir.join(name), &out.stdout).map_err(|e| e.to_string())
}

fn tree(dir: &Path, prefix: &str, files: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = format!("{prefix}{}", entry.file_name().to_string_lossy());
        if entry.file_type().unwrap().is_dir() {
            tree(&entry.path(), &format!("{name}/"), files);
        } else {
            files.insert(name, std::fs::read(entry.path()).unwrap());
        }
    }
}

fn cli_session(threads: usize) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    let gen = RandomBenchConfig { n: 90, m: 36, r: 4, p_list: vec![1], trials: 1, seed: 5, sigma_rule: SigmaRule::Linear };
    let x = generate_random_dataset::<f64>(&gen, 0).unwrap().into_inner();
    corrsense::io::write_matrix(d.join("x.dsm1"), &x).map_err(|e| e.to_string())?;
    let runs: [&[&str]; 12] = [
        &["fixture", "--name", "counterexample", "--out-rom", "cx", "--out-noise", "cx.dsm1", "--manifest-out", "m_fixture.json"],
        &["oracle", "--rom", "cx", "--noise", "cx.dsm1", "--p", "2", "--out", "oracle.json", "--manifest-out", "m_oracle.json"],
        &["fit", "--input", "x.dsm1", "--rank", "4", "--out-rom", "rom", "--out-noise", "noise.dsm1", "--manifest-out", "m_fit.json"],
        &["select", "--rom", "rom", "--p", "9", "--algorithm", "dg", "--out", "dg.json", "--manifest-out", "m_dg.json"],
        &["select", "--rom", "rom", "--noise", "noise.dsm1", "--p", "9", "--algorithm", "dgnc", "--out", "dgnc.json", "--manifest-out", "m_dgnc.json"],
        &["select", "--rom", "rom", "--noise", "noise.dsm1", "--p", "9", "--algorithm", "dgnc", "--filter-frac", "0.2", "--out", "dgnc_f.json", "--manifest-out", "m_dgnc_f.json"],
        &["estimate", "--rom", "rom", "--noise", "noise.dsm1", "--sensors", "dgnc.json", "--data", "x.dsm1", "--estimator", "gls", "--out", "z.dsm1", "--out-field", "field.dsm1", "--manifest-out", "m_estimate.json"],
        &["evaluate", "--rom", "rom", "--data", "x.dsm1", "--states", "z.dsm1", "--sensors", "dgnc.json", "--estimator", "gls", "--out", "eval.json", "--manifest-out", "m_evaluate.json"],
        &["bench-random", "--n", "80", "--m", "30", "--r", "5", "--p-list", "3,5,8,12", "--trials", "8", "--seed", "9", "--out", "bench.csv", "--manifest-out", "m_bench.json"],
        &["bench-random", "--n", "80", "--m", "30", "--r", "5", "--p-list", "6", "--trials", "4", "--sigma-rule", "geometric:0.9", "--out", "bench_g.csv", "--manifest-out", "m_bench_g.json"],
        &["crossval", "--input", "x.dsm1", "--folds", "3", "--resamples", "4", "--sizes", "6,12", "--p", "7", "--r", "4", "--seed", "2", "--out", "cv.csv", "--manifest-out", "m_crossval.json"],
        &["replay", "--manifest", "m_bench.json", "--manifest-out", "m_replay.json"],
    ];
    for args in runs {
        run_cli(d, threads, args)?;
    }
    let mut files = BTreeMap::new();
    tree(d, "", &mut files);
    Ok(files)
}

fn determinism() -> Outcome {
    let one = cli_session(1)?;
    let four = cli_session(4)?;
    let names: Vec<&String> = one.keys().collect();
    ensure(names == four.keys().collect::<Vec<_>>(), || "different file sets".into())?;
    for (name, bytes) in &one {
        ensure(four[name] == *bytes, || format!("{name} differs between 1 and 4 threads"))?;
    }
    Ok(format!("{} files byte-identical", one.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("counterexample regression", counterexample),
        ("rank-one consistency", rank_one_consistency),
        ("reduction to DG", reduction),
        ("scale invariance", scale_invariance),
        ("overdetermined monotonicity", monotonicity),
        ("exhaustive oracle checks", oracle_checks),
        ("estimator correctness", estimators),
        ("random benchmark ordering", random_benchmark),
        ("cross-validation trend", crossval),
        ("selection time scaling", scaling),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
