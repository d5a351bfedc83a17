//! `key = value` config files merged into the argument list.

use std::ffi::OsString;

use clap::CommandFactory;

use crate::args::Cli;
use crate::failure::Failure;

/// Reads `--config PATH` from `args` and splices the file's entries in
/// front of the explicit flags, so that the flags win.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::io(format!("cannot read config {path}: {e}")))?;
    let extra = parse(&text)?;
    let names: Vec<String> =
        Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let at = args
        .iter()
        .position(|a| a.to_str().is_some_and(|s| names.iter().any(|n| n == s)))
        .map(|i| i + 1)
        .unwrap_or(args.len());
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<String> {
    let mut iter = args.iter().filter_map(|a| a.to_str());
    while let Some(a) = iter.next() {
        if a == "--config" {
            return iter.next().map(str::to_string);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// `key = value` per line; `#` starts a comment; values may be quoted.
/// `key = true` for a switch becomes the bare flag, `key = false` drops it.
pub fn parse(text: &str) -> Result<Vec<OsString>, Failure> {
    let switches = ["print-json"];
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" {
            return Err(Failure::usage("config files cannot include other config files"));
        }
        if switches.contains(&key.as_str()) {
            match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(Failure::usage(format!("config key {key} takes true or false"))),
            }
            continue;
        }
        out.push(format!("--{key}").into());
        out.push(value.into());
    }
    Ok(out)
}
