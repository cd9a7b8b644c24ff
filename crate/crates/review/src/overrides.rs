use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ReviewError;

/// A corrected line index, or the marker that the fixation should be dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverrideLine {
    Line(usize),
    Discard,
}

impl Serialize for OverrideLine {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            OverrideLine::Line(l) => s.serialize_u64(*l as u64),
            OverrideLine::Discard => s.serialize_str("DISCARD"),
        }
    }
}

impl<'de> Deserialize<'de> for OverrideLine {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Line(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Line(l) => Ok(OverrideLine::Line(l)),
            Raw::Word(w) if w == "DISCARD" => Ok(OverrideLine::Discard),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "line must be a non-negative integer or \"DISCARD\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverrideRecord {
    pub trial_id: String,
    pub fixation_index: usize,
    pub line: OverrideLine,
    pub author: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

/// Append-only JSON-lines override log with the shadowed state in memory.
#[derive(Debug)]
pub struct OverrideLog {
    path: PathBuf,
    file: File,
    records: Vec<OverrideRecord>,
    /// Latest record per (trial, fixation).
    latest: BTreeMap<(String, usize), OverrideRecord>,
}

impl OverrideLog {
    /// Opens or creates the log and replays it. A torn final line left by a
    /// crash is cut off; every complete record is kept.
    pub fn open(path: &Path) -> Result<Self, ReviewError> {
        let log_err = |source| ReviewError::Log {
            path: path.to_path_buf(),
            source,
        };
        let text = match fs::read(path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(log_err(e)),
        };
        let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let mut records = Vec::new();
        for (i, raw) in text[..complete].split(|&b| b == b'\n').enumerate() {
            if raw.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let rec: OverrideRecord = serde_json::from_slice(raw).map_err(|e| ReviewError::CorruptLog {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        let mut tail_kept = false;
        if complete < text.len() {
            if let Ok(rec) = serde_json::from_slice::<OverrideRecord>(&text[complete..]) {
                records.push(rec);
                tail_kept = true;
            }
        }
        let file = OpenOptions::new().create(true).append(true).read(true).open(path).map_err(log_err)?;
        if complete < text.len() {
            if tail_kept {
                // The record was whole; only its newline is missing.
                (&file).write_all(b"\n").map_err(log_err)?;
            } else {
                file.set_len(complete as u64).map_err(log_err)?;
            }
            file.sync_all().map_err(log_err)?;
        }
        let mut log = Self {
            path: path.to_path_buf(),
            file,
            records: Vec::new(),
            latest: BTreeMap::new(),
        };
        for r in records {
            log.remember(r);
        }
        Ok(log)
    }

    fn remember(&mut self, r: OverrideRecord) {
        self.latest.insert((r.trial_id.clone(), r.fixation_index), r.clone());
        self.records.push(r);
    }

    /// Writes the record, syncs it to disk, then makes it visible.
    pub fn append(&mut self, record: OverrideRecord) -> Result<(), ReviewError> {
        let mut line = serde_json::to_vec(&record).expect("record serializes");
        line.push(b'\n');
        let log_err = |source| ReviewError::Log {
            path: self.path.clone(),
            source,
        };
        (&self.file).write_all(&line).map_err(log_err)?;
        self.file.sync_data().map_err(log_err)?;
        self.remember(record);
        Ok(())
    }

    /// Keeps only records accepted by `valid`, returning the rest. Effective
    /// state is rebuilt from what remains.
    pub fn retain(&mut self, valid: impl Fn(&OverrideRecord) -> bool) -> Vec<OverrideRecord> {
        let (keep, dropped): (Vec<_>, Vec<_>) = std::mem::take(&mut self.records).into_iter().partition(|r| valid(r));
        self.latest.clear();
        for r in keep {
            self.remember(r);
        }
        dropped
    }

    pub fn records(&self) -> &[OverrideRecord] {
        &self.records
    }

    /// Effective overrides of one trial, by fixation index.
    pub fn for_trial(&self, trial_id: &str) -> BTreeMap<usize, &OverrideRecord> {
        self.latest
            .range((trial_id.to_string(), 0)..=(trial_id.to_string(), usize::MAX))
            .map(|((_, i), r)| (*i, r))
            .collect()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
