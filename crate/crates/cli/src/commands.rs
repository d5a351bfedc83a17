use corrsense::estimation::{reconstruct_many, reconstruction_error, EstimatorKind};
use corrsense::experiments::{
    filter_candidates, run_crossval, run_random_benchmark, CrossvalConfig, RandomBenchConfig, SigmaRule,
};
use corrsense::rom::fit_rom;
use corrsense::selection::{counterexample_instance, exhaustive_oracle, select_dg, select_dgnc, SensorSet};
use corrsense::{Error, Estimator, Matrix, ReducedOrderModel, SnapshotMatrix};
use serde_json::{json, Value};

use crate::args::*;
use crate::failure::{Failure, EXIT_NUMERICAL};
use crate::files::{self, Inputs};

/// What a successful (or partially successful) command hands back.
pub struct Report {
    /// Printed on stdout with `--print-json`.
    pub json: Value,
    /// Set when outputs were written but the command still failed.
    pub failure: Option<Failure>,
}

impl Report {
    fn ok(json: Value) -> Self {
        Self { json, failure: None }
    }
}

pub fn run(cmd: &Command, seed: u64, inputs: &mut Inputs) -> Result<Report, Failure> {
    match cmd {
        Command::Fit(a) => fit(a, inputs),
        Command::Select(a) => select(a, inputs),
        Command::Estimate(a) => estimate(a, inputs),
        Command::Evaluate(a) => evaluate(a, inputs),
        Command::Oracle(a) => oracle(a, inputs),
        Command::BenchRandom(a) => bench(a, seed),
        Command::Crossval(a) => crossval(a, seed, inputs),
        Command::Fixture(a) => fixture(a),
        Command::Replay(_) => Err(Failure::usage("replay is resolved before dispatch")),
    }
}

fn kind(e: EstimatorArg) -> EstimatorKind {
    match e {
        EstimatorArg::Ls => EstimatorKind::Ls,
        EstimatorArg::Gls => EstimatorKind::Gls,
    }
}

fn fit(a: &FitArgs, inputs: &mut Inputs) -> Result<Report, Failure> {
    let x = SnapshotMatrix::new(inputs.matrix(&a.input)?)?;
    let (rom, noise) = fit_rom(&x, a.rank, a.center)?;
    files::write_rom(&a.out_rom, &rom, x.instances())?;
    files::write_noise(&a.out_noise, &noise)?;
    eprintln!(
        "fit: rank {} model of {}x{} data, noise factor with {} columns",
        rom.rank(),
        x.points(),
        x.instances(),
        noise.rank()
    );
    Ok(Report::ok(json!({
        "n": x.points(),
        "m": x.instances(),
        "r": rom.rank(),
        "q": noise.rank(),
        "ridge": noise.ridge(),
        "centered": a.center,
    })))
}

fn select(a: &SelectArgs, inputs: &mut Inputs) -> Result<Report, Failure> {
    let rom = inputs.rom(&a.rom)?;
    let noise = match &a.noise {
        Some(path) => Some(inputs.noise(path, a.ridge)?),
        None if a.algorithm == AlgorithmArg::Dgnc => {
            return Err(Failure::usage("--algorithm dgnc needs --noise"));
        }
        None => None,
    };
    let excluded = match (a.filter_frac, &noise) {
        (Some(frac), Some(nf)) => filter_candidates(nf, frac)?,
        (Some(_), None) => return Err(Failure::usage("--filter-frac needs --noise")),
        (None, _) => Vec::new(),
    };
    let result = match (a.algorithm, &noise) {
        (AlgorithmArg::Dgnc, Some(nf)) => select_dgnc(rom.modes(), nf, a.p, &excluded),
        _ => select_dg(rom.modes(), a.p, &excluded),
    };
    match result {
        Ok(set) => {
            files::write_text(&a.out, &set.to_json())?;
            eprintln!("select: {} sensors written to {}", set.len(), a.out.display());
            Ok(Report::ok(serde_json::from_str(&set.to_json())?))
        }
        Err(Error::SelectionAborted { step, partial }) => {
            files::write_text(&a.out, &partial.to_json())?;
            Ok(Report {
                json: serde_json::from_str(&partial.to_json())?,
                failure: Some(Failure {
                    code: EXIT_NUMERICAL,
                    message: format!(
                        "selection aborted at step {step}; partial set of {} written to {}",
                        partial.len(),
                        a.out.display()
                    ),
                }),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn check_set(set: &SensorSet, rom: &ReducedOrderModel) -> Result<(), Failure> {
    set.validate()?;
    if set.n != rom.points() || set.r != rom.rank() {
        return Err(Failure::usage(format!(
            "sensor set is for n={} r={}, model has n={} r={}",
            set.n,
            set.r,
            rom.points(),
            rom.rank()
        )));
    }
    Ok(())
}

fn estimate(a: &EstimateArgs, inputs: &mut Inputs) -> Result<Report, Failure> {
    let rom = inputs.rom(&a.rom)?;
    let set = inputs.sensors(&a.sensors)?;
    check_set(&set, &rom)?;
    let y = match (&a.data, &a.measurements) {
        (Some(path), _) => {
            let x = inputs.matrix(path)?;
            if x.nrows() != rom.points() {
                return Err(Failure::usage(format!("data has {} rows, model has {}", x.nrows(), rom.points())));
            }
            Matrix::from_fn(set.len(), x.ncols(), |i, j| x[(set.indices[i], j)])
        }
        (None, Some(path)) => inputs.matrix(path)?,
        (None, None) => return Err(Failure::usage("give --data or --measurements")),
    };
    let mut y = y;
    if let Some(mean) = rom.mean() {
        for (i, &idx) in set.indices.iter().enumerate() {
            let shift = mean[idx];
            y.row_mut(i).add_scalar_mut(-shift);
        }
    }
    let c = Matrix::from_fn(set.len(), rom.rank(), |i, j| rom.modes()[(set.indices[i], j)]);
    let cov = match &a.noise {
        Some(path) => Some(inputs.noise(path, a.ridge)?.covariance_submatrix(&set.indices)?),
        None => None,
    };
    let est = Estimator::new(kind(a.estimator), c, cov.as_ref())?;
    let z = est.estimate_many(&y)?;
    files::write_dsm1(&a.out, &z)?;
    if let Some(path) = &a.out_field {
        files::write_dsm1(path, &reconstruct_many(&rom, &z)?)?;
    }
    eprintln!("estimate: {} states written to {}", z.ncols(), a.out.display());
    Ok(Report::ok(json!({
        "p": set.len(),
        "r": rom.rank(),
        "estimator": kind(a.estimator),
        "instances": z.ncols(),
    })))
}

fn evaluate(a: &EvaluateArgs, inputs: &mut Inputs) -> Result<Report, Failure> {
    let rom = inputs.rom(&a.rom)?;
    let x = SnapshotMatrix::new(inputs.matrix(&a.data)?)?;
    let z = inputs.matrix(&a.states)?;
    let (p, algorithm) = match &a.sensors {
        Some(path) => {
            let set = inputs.sensors(path)?;
            check_set(&set, &rom)?;
            (Some(set.len()), Some(set.algorithm))
        }
        None => (None, None),
    };
    let e = reconstruction_error(&x, &rom, &z)?;
    let record = json!({
        "p": p,
        "algorithm": algorithm,
        "estimator": a.estimator.map(kind),
        "e": e,
    });
    if let Some(path) = &a.out {
        files::write_json(path, &record)?;
    }
    eprintln!("evaluate: e = {e}");
    Ok(Report::ok(record))
}

fn oracle(a: &OracleArgs, inputs: &mut Inputs) -> Result<Report, Failure> {
    let rom = inputs.rom(&a.rom)?;
    let noise = match &a.noise {
        Some(path) => Some(inputs.noise(path, a.ridge)?),
        None => None,
    };
    let set = exhaustive_oracle(rom.modes(), noise.as_ref(), a.p, a.budget)?;
    files::write_text(&a.out, &set.to_json())?;
    eprintln!("oracle: best {}-subset {:?}", a.p, set.indices);
    Ok(Report::ok(serde_json::from_str(&set.to_json())?))
}

fn sigma_rule(text: &str) -> Result<SigmaRule, Failure> {
    let bad = || Failure::usage(format!("unknown sigma rule {text:?}; use linear, truncated:K or geometric:R"));
    let rule = match text.split_once(':') {
        None if text == "linear" => SigmaRule::Linear,
        Some(("truncated", k)) => SigmaRule::LinearTruncated { keep: k.parse().map_err(|_| bad())? },
        Some(("geometric", r)) => SigmaRule::Geometric { ratio: r.parse().map_err(|_| bad())? },
        _ => return Err(bad()),
    };
    rule.validate()?;
    Ok(rule)
}

fn bench(a: &BenchArgs, seed: u64) -> Result<Report, Failure> {
    let cfg = RandomBenchConfig {
        n: a.n,
        m: a.m,
        r: a.r,
        p_list: a.p_list.clone(),
        trials: a.trials,
        seed,
        sigma_rule: sigma_rule(&a.sigma_rule)?,
    };
    let table = run_random_benchmark::<f64>(&cfg)?;
    files::write_text(&a.out, &table.to_csv())?;
    files::write_json(&files::meta_path(&a.out), &json!({ "command": "bench-random", "config": cfg }))?;
    eprintln!("bench-random: {} rows written to {}", table.rows.len(), a.out.display());
    Ok(Report::ok(serde_json::to_value(&table)?))
}

fn crossval(a: &CrossvalArgs, seed: u64, inputs: &mut Inputs) -> Result<Report, Failure> {
    let x = SnapshotMatrix::new(inputs.matrix(&a.input)?)?;
    let cfg = CrossvalConfig {
        folds: a.folds,
        resamples: a.resamples,
        train_noise_sizes: a.sizes.clone(),
        p: a.p,
        r: a.r,
        seed,
        center: a.center,
        filter_frac: a.filter_frac,
    };
    let table = run_crossval(&x, &cfg)?;
    files::write_text(&a.out, &table.to_csv())?;
    let input = a.input.display().to_string();
    files::write_json(
        &files::meta_path(&a.out),
        &json!({ "command": "crossval", "input": input, "config": cfg }),
    )?;
    eprintln!("crossval: {} rows written to {}", table.rows.len(), a.out.display());
    Ok(Report::ok(serde_json::to_value(&table)?))
}

fn fixture(a: &FixtureArgs) -> Result<Report, Failure> {
    match a.name {
        FixtureName::Counterexample => {
            let (modes, noise) = counterexample_instance::<f64>();
            let rom = ReducedOrderModel::from_parts(
                modes,
                corrsense::Vector::from_element(1, 1.0),
                Matrix::from_element(1, 1, 1.0),
                None,
            )?;
            files::write_rom(&a.out_rom, &rom, 1)?;
            files::write_noise(&a.out_noise, &noise)?;
        }
    }
    eprintln!("fixture: written to {} and {}", a.out_rom.display(), a.out_noise.display());
    Ok(Report::ok(json!({ "fixture": a.name })))
}
