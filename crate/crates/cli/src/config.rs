//! `--config` files: TOML tables whose keys are the subcommand's flag names.
//!
//! ```toml
//! family = "gauss"
//! kappas = [0.25, 0.5, 1.0]
//! trials = 100
//! ```
//!
//! Each key becomes a `--key=value` argument placed right after the
//! subcommand. Keys also given on the command line are skipped, so flags
//! win. Underscores in keys are read as hyphens.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use crate::error::{CliError, CliResult};

/// Subcommands that take a further subcommand.
const NESTED: &[&str] = &["model"];

fn config_path(args: &[OsString]) -> CliResult<Option<PathBuf>> {
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return match iter.next() {
                Some(p) => Ok(Some(PathBuf::from(p))),
                None => Err(CliError::Usage("--config needs a file".into())),
            };
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
    }
    Ok(None)
}

/// Index just past the (possibly nested) subcommand name.
fn insertion_point(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            if NESTED.contains(&s.as_ref()) && i + 1 < args.len() {
                return Some(i + 2);
            }
            return Some(i + 1);
        }
        i += 1;
    }
    None
}

fn render(key: &str, value: &toml::Value) -> CliResult<Option<String>> {
    use toml::Value;
    let scalar = |v: &Value| -> CliResult<String> {
        match v {
            Value::String(s) => Ok(s.clone()),
            Value::Integer(i) => Ok(i.to_string()),
            Value::Float(f) => Ok(f.to_string()),
            Value::Boolean(b) => Ok(b.to_string()),
            _ => Err(CliError::Usage(format!("config key {key:?}: unsupported value {v}"))),
        }
    };
    Ok(match value {
        Value::Boolean(true) => Some(String::new()),
        Value::Boolean(false) => None,
        Value::Array(items) => Some(items.iter().map(scalar).collect::<CliResult<Vec<_>>>()?.join(",")),
        v => Some(scalar(v)?),
    })
}

fn given_on_command_line(args: &[OsString], flag: &str) -> bool {
    let with_value = format!("{flag}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_value)
    })
}

/// Splice the config file named by `--config`, if any, into `args`.
pub fn expand(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let Some(at) = insertion_point(&args) else {
        return Ok(args);
    };
    let mut extra = Vec::new();
    for (key, value) in &table {
        let flag = if key.len() == 1 {
            format!("--{key}")
        } else {
            format!("--{}", key.replace('_', "-"))
        };
        if given_on_command_line(&args, &flag) {
            continue;
        }
        match render(key, value)? {
            Some(v) if v.is_empty() => extra.push(OsString::from(flag)),
            Some(v) => extra.push(OsString::from(format!("{flag}={v}"))),
            None => {}
        }
    }
    let mut out = args;
    out.splice(at..at, extra);
    Ok(out)
}
