//! Precedence of option values: command-line flags, then the `--config`
//! file, then built-in defaults.

use std::path::Path;

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Reads a config file: a flat JSON object keyed by option name
/// (`snake_case` or `kebab-case`).
pub fn load(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(interurn::Error::from)?;
    match serde_json::from_str(&text).map_err(interurn::Error::from)? {
        Value::Object(map) => Ok(map
            .into_iter()
            .map(|(k, v)| (k.replace('-', "_"), v))
            .collect()),
        _ => Err(CliError::Usage(format!(
            "config file {} must hold a JSON object",
            path.display()
        ))),
    }
}

/// Overlays `config` on every option of `args` that was not given on the
/// command line. Returns the merged options and their JSON form.
pub fn merge<T: Serialize + DeserializeOwned>(
    args: T,
    matches: &ArgMatches,
    config: &Map<String, Value>,
) -> Result<(T, Value), CliError> {
    let mut value = serde_json::to_value(&args).map_err(interurn::Error::from)?;
    let fields = value.as_object_mut().expect("argument structs serialize to objects");
    for (key, v) in config {
        if !fields.contains_key(key) {
            continue;
        }
        if matches.value_source(key) != Some(ValueSource::CommandLine) {
            fields.insert(key.clone(), v.clone());
        }
    }
    let merged = serde_json::from_value(value.clone())
        .map_err(|e| CliError::Usage(format!("bad value in config file: {e}")))?;
    Ok((merged, value))
}
