//! Optional TOML defaults.
//!
//! Top-level keys set global flags, tables named after a subcommand set that
//! subcommand's flags. Keys are flag names without the leading dashes.
//! Anything given on the command line wins.
//!
//! ```toml
//! seed = 7
//!
//! [train]
//! epochs = 10
//! batch-size = 32
//! ```

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

/// Extra `--flag value` arguments for every config entry not already given
/// on the command line.
pub fn extra_args(path: &Path, cmd: &Command, matches: &ArgMatches) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let (sub_name, sub_matches) = matches.subcommand().ok_or("no subcommand given")?;
    let sub_cmd = cmd
        .find_subcommand(sub_name)
        .ok_or_else(|| format!("unknown subcommand {sub_name}"))?;

    let mut out = Vec::new();
    for (key, value) in &table {
        match value {
            toml::Value::Table(section) => {
                if section_matches(key, sub_cmd) {
                    for (k, v) in section {
                        push_entry(&mut out, sub_cmd, sub_matches, k, v)?;
                    }
                } else if cmd.find_subcommand(key).is_none() {
                    return Err(format!("unknown config section [{key}]"));
                }
            }
            v => push_entry(&mut out, cmd, matches, key, v)?,
        }
    }
    Ok(out)
}

fn section_matches(key: &str, sub: &Command) -> bool {
    sub.get_name() == key || sub.get_all_aliases().any(|a| a == key)
}

fn push_entry(
    out: &mut Vec<OsString>,
    cmd: &Command,
    matches: &ArgMatches,
    key: &str,
    value: &toml::Value,
) -> Result<(), String> {
    let arg = cmd
        .get_arguments()
        .find(|a| a.get_long() == Some(key))
        .ok_or_else(|| format!("unknown config key {key:?} for `{}`", cmd.get_name()))?;
    if matches.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
        return Ok(());
    }
    let flag = format!("--{key}");
    match value {
        toml::Value::Boolean(true) => out.push(flag.into()),
        toml::Value::Boolean(false) => {}
        toml::Value::Array(items) => {
            let joined = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?.join(",");
            out.push(format!("{flag}={joined}").into());
        }
        v => out.push(format!("{flag}={}", scalar(v)?).into()),
    }
    Ok(())
}

fn scalar(v: &toml::Value) -> Result<String, String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}
