//! Merging `--config` files with command-line flags.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// A usage error: bad flags, bad config, missing required options.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// A parsed config file: a flat JSON object keyed by flag name. The optional
/// `command` key pins the file to one subcommand.
#[derive(Debug)]
pub struct ConfigFile {
    keys: Map<String, Value>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
        match serde_json::from_str(&text) {
            Ok(Value::Object(keys)) => Ok(Self { keys }),
            Ok(_) => Err(Usage(format!("{}: config must be a JSON object", path.display())).into()),
            Err(e) => Err(Usage(format!("{}: {e}", path.display())).into()),
        }
    }
}

pub fn jobs(flag: Option<usize>, file: Option<&ConfigFile>) -> anyhow::Result<Option<usize>> {
    let from_file = match file.and_then(|f| f.keys.get("jobs")) {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| Usage("config key jobs must be a positive integer".into()))?,
        ),
    };
    match flag.or(from_file) {
        Some(0) => Err(Usage("--jobs must be at least 1".into()).into()),
        j => Ok(j),
    }
}

/// Overlays the flags that were actually given onto the config file's keys.
/// Unset flags (absent options, false switches, empty lists) defer to the file.
pub fn resolve<T: Serialize + DeserializeOwned>(cli: T, file: Option<&ConfigFile>, command: &str) -> anyhow::Result<T> {
    let Some(file) = file else {
        return Ok(cli);
    };
    let mut merged = file.keys.clone();
    merged.remove("jobs");
    match merged.remove("command") {
        None => {}
        Some(Value::String(c)) if c == command => {}
        Some(other) => {
            return Err(Usage(format!("config is for command {other}, not {command:?}")).into());
        }
    }
    let Value::Object(given) = serde_json::to_value(&cli)? else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in given {
        let unset = match &v {
            Value::Null | Value::Bool(false) => true,
            Value::Array(a) => a.is_empty(),
            _ => false,
        };
        if !unset {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Usage(format!("config: {e}")).into())
}

/// Seed from the flag or config, falling back to `DRIFTLAB_SEED`, then 0.
pub fn seed(given: Option<u64>) -> anyhow::Result<(u64, &'static str)> {
    if let Some(s) = given {
        return Ok((s, "flag"));
    }
    match std::env::var("DRIFTLAB_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(|s| (s, "env"))
            .map_err(|_| Usage(format!("DRIFTLAB_SEED must be an unsigned integer, got {v:?}")).into()),
        Err(_) => Ok((0, "default")),
    }
}

/// Unwraps a required option after merging.
pub fn required<T>(v: Option<T>, flag: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| Usage(format!("--{flag} is required")).into())
}

#[cfg(test)]
mod tests {
    use serde::Deserialize;

    use super::*;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
    struct Args {
        out: Option<String>,
        seed: Option<u64>,
        noise: Vec<f64>,
        no_raster: bool,
    }

    fn file(v: Value) -> ConfigFile {
        ConfigFile {
            keys: v.as_object().unwrap().clone(),
        }
    }

    #[test]
    fn flags_override_file_and_unset_flags_defer() {
        let f = file(serde_json::json!({"out": "a", "seed": 3, "noise": [1.0], "no-raster": true, "jobs": 2}));
        let cli = Args {
            out: Some("b".into()),
            ..Args::default()
        };
        let got = resolve(cli, Some(&f), "x").unwrap();
        assert_eq!(
            got,
            Args {
                out: Some("b".into()),
                seed: Some(3),
                noise: vec![1.0],
                no_raster: true,
            }
        );
    }

    #[test]
    fn unknown_keys_and_wrong_command_are_usage_errors() {
        let f = file(serde_json::json!({"colour": 1}));
        assert!(resolve(Args::default(), Some(&f), "x").unwrap_err().is::<Usage>());
        let f = file(serde_json::json!({"command": "serve"}));
        assert!(resolve(Args::default(), Some(&f), "simulate").unwrap_err().is::<Usage>());
        let f = file(serde_json::json!({"command": "simulate"}));
        assert!(resolve(Args::default(), Some(&f), "simulate").is_ok());
    }

    #[test]
    fn jobs_zero_rejected() {
        assert!(jobs(Some(0), None).is_err());
        let f = file(serde_json::json!({"jobs": 3}));
        assert_eq!(jobs(None, Some(&f)).unwrap(), Some(3));
        assert_eq!(jobs(Some(1), Some(&f)).unwrap(), Some(1));
    }
}
