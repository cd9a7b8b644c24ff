//! Reproducibility manifest written next to every run's outputs.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context as _;
use serde::Serialize;
use serde_json::{json, Value};

pub const FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    /// Resolved options, after merging the config file.
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_source: Option<&'static str>,
    pub jobs: Option<usize>,
    pub versions: Value,
    /// Output file names, sorted.
    pub outputs: Vec<String>,
    /// Command-specific details, such as fallback reasons.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
    /// The only field that changes between identical runs.
    pub created_unix_ms: u128,
}

impl RunManifest {
    pub fn new(command: &'static str, config: &impl Serialize, jobs: Option<usize>) -> Self {
        Self {
            command,
            config: serde_json::to_value(config).expect("options serialize"),
            seed: None,
            seed_source: None,
            jobs,
            versions: json!({
                "driftlab": env!("CARGO_PKG_VERSION"),
                "parallel": driftlab_core::batch::Execution::parallel_available(),
            }),
            outputs: Vec::new(),
            details: Value::Null,
            created_unix_ms: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis()),
        }
    }

    pub fn with_seed(mut self, seed: u64, source: &'static str) -> Self {
        self.seed = Some(seed);
        self.seed_source = Some(source);
        self
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("manifest serializes")
    }

    pub fn write(&mut self, dir: &Path) -> anyhow::Result<()> {
        self.outputs.sort();
        write_json(&dir.join(FILE), &self.to_value())
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}
