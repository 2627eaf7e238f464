//! `--config FILE`: flat `key = value` lines spliced in right after the
//! subcommand, so later command-line flags override them.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

pub fn parse_config(text: &str, path: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{path}:{}: expected `key = value`", n + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Config(format!("{path}:{}: empty key", n + 1)));
        }
        if key == "config" {
            continue;
        }
        out.push(OsString::from(format!("--{key}")));
        out.push(OsString::from(value.trim()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let shown = Path::new(&path).display().to_string();
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(shown.clone(), e))?;
    let extra = parse_config(&text, &shown)?;
    if args.len() < 2 {
        return Ok(args);
    }
    let mut out = Vec::with_capacity(args.len() + extra.len());
    out.push(args[0].clone());
    out.push(args[1].clone());
    out.extend(extra);
    out.extend(args[2..].iter().cloned());
    Ok(out)
}
