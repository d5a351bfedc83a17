mod args;
mod commands;
mod config;
mod failure;
mod files;

use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::args::{Cli, Command};
use crate::failure::{Failure, EXIT_USAGE};
use crate::files::Inputs;

/// Everything needed to replay a run. Thread count and wall-clock time are
/// left out on purpose: they never affect outputs.
#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    params: serde_json::Value,
    inputs: &'a BTreeMap<String, String>,
    exit_code: i32,
}

#[derive(Deserialize)]
struct RecordedRun {
    command: String,
    seed: u64,
    params: serde_json::Map<String, serde_json::Value>,
    inputs: BTreeMap<String, String>,
}

/// Rebuilds the argument list of a recorded run; common flags other than
/// the seed come from the replaying invocation.
fn replay_args(cli: &Cli, manifest: &std::path::Path) -> Result<Vec<String>, Failure> {
    let mut inputs = Inputs::default();
    let run: RecordedRun = inputs.json(manifest)?;
    if run.command == "replay" {
        return Err(Failure::usage("cannot replay a replay manifest"));
    }
    for (path, digest) in &run.inputs {
        let mut check = Inputs::default();
        check.bytes(std::path::Path::new(path))?;
        if check.digests().get(path) != Some(digest) {
            return Err(Failure::io(format!("{path} changed since the recorded run")));
        }
    }
    let mut args = vec!["corrsense".to_string(), run.command, "--seed".into(), run.seed.to_string()];
    for (key, value) in run.params {
        let text = match value {
            serde_json::Value::Null => continue,
            serde_json::Value::String(s) => s,
            serde_json::Value::Array(items) => {
                items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            }
            other => other.to_string(),
        };
        args.push(format!("--{key}"));
        args.push(text);
    }
    args.extend(["--threads".into(), cli.common.threads.to_string()]);
    if let Some(path) = &cli.common.manifest_out {
        args.extend(["--manifest-out".into(), path.display().to_string()]);
    }
    if cli.common.print_json {
        args.push("--print-json".into());
    }
    Ok(args)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Command::Replay(a) = &cli.command {
        let args = replay_args(cli, &a.manifest)?;
        let recorded = Cli::try_parse_from(args).map_err(|e| Failure::usage(e.to_string()))?;
        return execute(&recorded);
    }
    let mut inputs = Inputs::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {} threads: {e}", cli.common.threads)))?;
    let outcome = pool.install(|| commands::run(&cli.command, cli.common.seed, &mut inputs));
    let (json, failure) = match outcome {
        Ok(report) => (Some(report.json), report.failure),
        Err(f) => (None, Some(f)),
    };
    if let Some(path) = &cli.common.manifest_out {
        let manifest = RunManifest {
            command: cli.command.name(),
            version: env!("CARGO_PKG_VERSION"),
            seed: cli.common.seed,
            params: cli.command.params(),
            inputs: inputs.digests(),
            exit_code: failure.as_ref().map_or(0, |f| f.code),
        };
        files::write_json(path, &manifest)?;
    }
    if cli.common.print_json {
        if let Some(json) = json {
            println!("{}", serde_json::to_string_pretty(&json).expect("JSON values serialize"));
        }
    }
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code as u8);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
