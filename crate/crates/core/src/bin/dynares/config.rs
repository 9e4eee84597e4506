//! Settings resolution: built-in defaults < config file < command-line flags.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use dynares_core::{Error, Result};

fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

fn scalar(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

/// Parses a JSON object, or `key = value` lines where values are JSON
/// scalars, bare strings, or comma lists.
pub fn parse_config(text: &str) -> Result<Map<String, Value>> {
    if text.trim_start().starts_with('{') {
        let map: Map<String, Value> = serde_json::from_str(text)?;
        return Ok(map.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect());
    }
    let mut map = Map::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: "config".into(),
            line: lineno + 1,
            msg: format!("expected key=value, found {line:?}"),
        })?;
        let value = value.trim();
        let value = if value.contains(',') && !value.starts_with('[') {
            Value::Array(value.split(',').map(|v| scalar(v.trim())).collect())
        } else {
            scalar(value)
        };
        map.insert(normalize_key(key), value);
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        },
        other => other,
    })
}

/// Overlays the non-null fields of `flags` on the config file and
/// deserializes the result. Keys the target type does not know are errors.
pub fn resolve<T: Serialize + DeserializeOwned>(config: Option<&Path>, flags: &impl Serialize) -> Result<T> {
    let mut merged = match config {
        Some(p) => load_config(p)?,
        None => Map::new(),
    };
    if let Value::Object(flags) = serde_json::to_value(flags)? {
        for (k, v) in flags {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    let keys: Vec<String> = merged.keys().cloned().collect();
    let resolved: T = serde_json::from_value(Value::Object(merged))
        .map_err(|e| Error::InvalidInput(format!("settings: {e}")))?;
    if let Value::Object(known) = serde_json::to_value(&resolved)? {
        if let Some(k) = keys.iter().find(|k| !known.contains_key(*k)) {
            return Err(Error::InvalidInput(format!("unknown setting {k:?}")));
        }
    }
    Ok(resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_lines() {
        let m = parse_config("# c\ndepth = 7\nthresholds=0.1, 0.4\nloss = balanced\nbatch-norm=false\n").unwrap();
        assert_eq!(m["depth"], 7);
        assert_eq!(m["thresholds"], serde_json::json!([0.1, 0.4]));
        assert_eq!(m["loss"], "balanced");
        assert_eq!(m["batch_norm"], false);
        assert!(parse_config("depth 7").is_err());
    }

    #[test]
    fn json_objects() {
        let m = parse_config(r#"{"edge-batch": 10, "k": 3}"#).unwrap();
        assert_eq!(m["edge_batch"], 10);
    }
}
