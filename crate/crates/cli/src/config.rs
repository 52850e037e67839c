//! Config-file blocks merged with command-line overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Top level of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub simulate: Option<Value>,
    pub variogram: Option<Value>,
    pub estimate: Option<Value>,
    pub experiment: Option<Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flag values keyed by their config-file names; unset flags are skipped.
#[derive(Debug, Default)]
pub struct Overrides(Map<String, Value>);

impl Overrides {
    pub fn set<T: serde::Serialize>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0.insert(key.to_owned(), serde_json::to_value(v).expect("flag values serialize"));
        }
        self
    }

    pub fn set_default(&mut self, key: &str, value: Value) {
        self.0.entry(key.to_owned()).or_insert(value);
    }
}

/// File block first, then flags on top; the result is both deserialized and
/// returned as JSON for the manifest.
pub fn resolve<T: DeserializeOwned>(
    section: &str,
    block: Option<Value>,
    flags: Overrides,
    defaults: Overrides,
) -> CliResult<(T, Value)> {
    let mut merged = match block {
        None => Map::new(),
        Some(Value::Object(m)) => m,
        Some(other) => {
            return Err(CliError::Config(format!("`{section}` block must be a JSON object, got {other}")))
        }
    };
    for (k, v) in defaults.0 {
        merged.entry(k).or_insert(v);
    }
    merged.extend(flags.0);
    let value = Value::Object(merged);
    let parsed = serde_json::from_value(value.clone())
        .map_err(|e| CliError::Config(format!("invalid `{section}` configuration: {e}")))?;
    Ok((parsed, value))
}
