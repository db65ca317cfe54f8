//! Configuration files and their merge with command-line flags.
//!
//! A file is TOML. Keys may sit at the top level or inside the `[domain]`,
//! `[regime]`, `[sampling]` and `[output]` sections; sections only group
//! keys, so `[regime] b = 0.3` and a top-level `b = 0.3` mean the same.
//! Flags override file values.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::{CliError, CliResult};

pub const SECTIONS: &[&str] = &["domain", "regime", "sampling", "output"];

/// Parses TOML text into a flat key map.
pub fn parse_str(text: &str) -> CliResult<Map<String, Value>> {
    let table: toml::Table = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    let mut flat = Map::new();
    for (key, value) in table {
        match value {
            toml::Value::Table(section) => {
                if !SECTIONS.contains(&key.as_str()) {
                    return Err(CliError::config(format!(
                        "unknown section `[{key}]`, expected one of {}",
                        SECTIONS.join(", ")
                    )));
                }
                for (k, v) in section {
                    insert_unique(&mut flat, k, v)?;
                }
            }
            v => insert_unique(&mut flat, key, v)?,
        }
    }
    Ok(flat)
}

fn insert_unique(flat: &mut Map<String, Value>, key: String, value: toml::Value) -> CliResult<()> {
    if flat.contains_key(&key) {
        return Err(CliError::config(format!("key `{key}` is set more than once")));
    }
    flat.insert(key, serde_json::to_value(value)?);
    Ok(())
}

pub fn load_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

fn same_value(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

/// Overlays the flags on the file map and decodes the result. Each flag
/// that changes a file value produces a warning through `warn`.
pub fn merge<P>(mut file: Map<String, Value>, flags: &P, warn: &mut dyn FnMut(String)) -> CliResult<P>
where
    P: Serialize + DeserializeOwned,
{
    let flags = match serde_json::to_value(flags)? {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    for (key, value) in flags {
        if let Some(old) = file.get(&key) {
            if !same_value(old, &value) {
                warn(format!(
                    "warning: --{} = {value} overrides the config value {old}",
                    key.replace('_', "-")
                ));
            }
        }
        file.insert(key, value);
    }
    serde_json::from_value(Value::Object(file)).map_err(|e| CliError::config(e.to_string()))
}

/// Reads the optional config file and merges it with the flags.
pub fn resolve<P>(path: Option<&Path>, flags: &P, warn: &mut dyn FnMut(String)) -> CliResult<P>
where
    P: Serialize + DeserializeOwned,
{
    let file = match path {
        Some(p) => load_file(p)?,
        None => Map::new(),
    };
    merge(file, flags, warn)
}
