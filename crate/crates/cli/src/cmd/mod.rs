pub mod correct;
pub mod decode;
pub mod evaluate;
pub mod features;
pub mod serve;
pub mod simulate;

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context as _;
use driftlab_core::io::{read_predictions, MANIFEST_FILE};
use driftlab_core::trial::{Assignment, Source};

use crate::config::Usage;

pub struct Context {
    pub jobs: Option<usize>,
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Every `<source>.csv` predictions file in `dir`, keyed by source.
pub fn read_runs(dir: &Path) -> anyhow::Result<BTreeMap<Source, Vec<Assignment>>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv") && p.file_name().is_some_and(|n| n != MANIFEST_FILE))
        .collect();
    paths.sort();
    for p in paths {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let source = Source::parse(stem)
            .ok_or_else(|| anyhow::anyhow!("{}: file name is not a known source", p.display()))?;
        out.insert(source, read_predictions(&p, source)?);
    }
    Ok(out)
}

pub fn parse_json_arg(s: &str) -> Result<serde_json::Value, String> {
    serde_json::from_str(s).map_err(|e| format!("not valid JSON: {e}"))
}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}
