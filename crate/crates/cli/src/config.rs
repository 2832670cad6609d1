//! `--config` files: a JSON object whose entries fill in flags missing from
//! the command line.

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use crate::Cli;

/// Parses `argv` with the entries of the `--config` file, if any, appended.
/// Exits with code 2 on any usage error.
pub fn parse_with_config(argv: &[String]) -> Result<Cli, ExitCode> {
    let mut full = argv.to_vec();
    if let Some(path) = config_path(argv) {
        match config_args(Path::new(&path), argv) {
            Ok(extra) => full.extend(extra),
            Err(msg) => {
                eprintln!("error: {msg}");
                return Err(ExitCode::from(2));
            }
        }
    }
    Cli::try_parse_from(&full).map_err(report)
}

/// Value of `--config PATH` or `--config=PATH`.
fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn report(e: clap::Error) -> ExitCode {
    let code = if e.use_stderr() { 2 } else { 0 };
    let _ = e.print();
    ExitCode::from(code)
}

fn flag_present(argv: &[String], flag: &str) -> bool {
    argv.iter()
        .any(|a| a == flag || a.strip_prefix(flag).is_some_and(|rest| rest.starts_with('=')))
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}

/// Flags for config entries whose flag is absent from `argv`.
pub fn config_args(path: &Path, argv: &[String]) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let Value::Object(map) = value else {
        return Err(format!("{}: expected a JSON object", path.display()));
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag_present(argv, &flag) {
            continue;
        }
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                out.push(flag);
                for item in &items {
                    out.push(scalar(item)?);
                }
            }
            other => {
                out.push(flag);
                out.push(scalar(&other)?);
            }
        }
    }
    Ok(out)
}
