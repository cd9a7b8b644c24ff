//! Per-trial file format: `<id>.csv` holds the fixations and `<id>.json` holds
//! trial metadata plus the character boxes.
//!
//! CSV header is `x,y,start,duration,gold_line,discarded`. Coordinates are
//! written with Rust's shortest round-trip float formatting, so a
//! save/load cycle is bit-exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trial::{Assignment, CharBox, Fixation, Source, Stimulus, Trial, Violation};

pub const CSV_HEADER: &str = "x,y,start,duration,gold_line,discarded";

/// File name reserved for dataset/run manifests inside a dataset directory.
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: invalid trial: {}", join_violations(.violations))]
    Validation {
        path: PathBuf,
        violations: Vec<Violation>,
    },
    #[error("orphan file without its pair: {0}")]
    OrphanFile(PathBuf),
    #[error("duplicate trial id {0}")]
    DuplicateId(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CharRecord {
    ch: String,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    line: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrialRecord {
    id: String,
    dataset: String,
    line_count: usize,
    metadata: BTreeMap<String, String>,
    chars: Vec<CharRecord>,
}

/// Serializes the fixation table.
pub fn fixations_csv(fixations: &[Fixation]) -> String {
    let mut out = String::with_capacity(32 * (fixations.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for f in fixations {
        let gold = f.gold_line.map(|g| g.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{:?},{:?},{},{},{},{}",
            f.x,
            f.y,
            f.start,
            f.duration,
            gold,
            u8::from(f.discarded)
        );
    }
    out
}

/// Serializes trial metadata and stimulus geometry.
pub fn trial_json(trial: &Trial) -> String {
    let record = TrialRecord {
        id: trial.id.clone(),
        dataset: trial.dataset.clone(),
        line_count: trial.line_count(),
        metadata: trial.metadata.clone(),
        chars: trial
            .stimulus
            .boxes()
            .iter()
            .map(|b| CharRecord {
                ch: b.ch.to_string(),
                x0: b.x0,
                y0: b.y0,
                x1: b.x1,
                y1: b.y1,
                line: b.line,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&record).expect("trial record serializes");
    s.push('\n');
    s
}

/// Writes `<id>.csv` and `<id>.json` into `dir`.
pub fn save_trial(trial: &Trial, dir: &Path) -> Result<(PathBuf, PathBuf), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join(format!("{}.csv", trial.id));
    let json = dir.join(format!("{}.json", trial.id));
    fs::write(&csv, fixations_csv(&trial.fixations)).map_err(io_err(&csv))?;
    fs::write(&json, trial_json(trial)).map_err(io_err(&json))?;
    Ok((csv, json))
}

pub fn parse_fixations(text: &str, path: &Path) -> Result<Vec<Fixation>, IoError> {
    let parse_err = |line: usize, message: String| IoError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == CSV_HEADER => {}
        Some((_, h)) => return Err(parse_err(1, format!("unexpected header {h:?}"))),
        None => return Err(parse_err(1, "missing header".into())),
    }
    let mut out = Vec::new();
    for (i, raw) in lines {
        let lineno = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 6 {
            return Err(parse_err(lineno, format!("expected 6 columns, found {}", cols.len())));
        }
        let num = |idx: usize, name: &str| -> Result<f64, IoError> {
            cols[idx]
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, format!("{name}: {e}")))
        };
        let int = |idx: usize, name: &str| -> Result<u64, IoError> {
            cols[idx]
                .parse::<u64>()
                .map_err(|e| parse_err(lineno, format!("{name}: {e}")))
        };
        let gold_line = match cols[4] {
            "" => None,
            g => Some(
                g.parse::<usize>()
                    .map_err(|e| parse_err(lineno, format!("gold_line: {e}")))?,
            ),
        };
        let discarded = match cols[5] {
            "0" => false,
            "1" => true,
            d => return Err(parse_err(lineno, format!("discarded must be 0 or 1, got {d:?}"))),
        };
        out.push(Fixation {
            x: num(0, "x")?,
            y: num(1, "y")?,
            start: int(2, "start")?,
            duration: int(3, "duration")?,
            gold_line,
            discarded,
        });
    }
    Ok(out)
}

/// Reads a trial written by [`save_trial`] and validates it.
pub fn load_trial(csv: &Path, json: &Path) -> Result<Trial, IoError> {
    let csv_text = fs::read_to_string(csv).map_err(io_err(csv))?;
    let json_text = fs::read_to_string(json).map_err(io_err(json))?;
    let fixations = parse_fixations(&csv_text, csv)?;
    let record: TrialRecord = serde_json::from_str(&json_text).map_err(|e| IoError::Parse {
        path: json.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut boxes = Vec::with_capacity(record.chars.len());
    for (i, c) in record.chars.into_iter().enumerate() {
        let mut chars = c.ch.chars();
        let ch = match (chars.next(), chars.next()) {
            (Some(ch), None) => ch,
            _ => {
                return Err(IoError::Parse {
                    path: json.to_path_buf(),
                    line: 0,
                    message: format!("chars[{i}].ch must be exactly one character"),
                })
            }
        };
        boxes.push(CharBox {
            ch,
            x0: c.x0,
            y0: c.y0,
            x1: c.x1,
            y1: c.y1,
            line: c.line,
        });
    }
    let stimulus = Stimulus::new(boxes, record.line_count).map_err(|e| IoError::Validation {
        path: json.to_path_buf(),
        violations: vec![Violation {
            code: crate::trial::ViolationCode::InvalidStimulus,
            fixation: None,
            message: format!("stimulus: {e}"),
        }],
    })?;
    let trial = Trial {
        id: record.id,
        dataset: record.dataset,
        fixations,
        stimulus,
        metadata: record.metadata,
    };
    let violations = trial.validate();
    if !violations.is_empty() {
        return Err(IoError::Validation {
            path: csv.to_path_buf(),
            violations,
        });
    }
    Ok(trial)
}

/// Pairs `<id>.csv` with `<id>.json` in `dir`. Files with other extensions and
/// the reserved manifest are ignored; any unpaired trial file is an error.
pub fn dataset_pairs(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>, IoError> {
    let mut csvs = BTreeSet::new();
    let mut jsons = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        if !path.is_file() || path.file_name().is_some_and(|n| n == MANIFEST_FILE) {
            continue;
        }
        let (Some(stem), Some(ext)) = (
            path.file_stem().and_then(|s| s.to_str()),
            path.extension().and_then(|s| s.to_str()),
        ) else {
            continue;
        };
        match ext {
            "csv" => csvs.insert(stem.to_string()),
            "json" => jsons.insert(stem.to_string()),
            _ => continue,
        };
    }
    if let Some(orphan) = csvs.symmetric_difference(&jsons).next() {
        let ext = if csvs.contains(orphan) { "csv" } else { "json" };
        return Err(IoError::OrphanFile(dir.join(format!("{orphan}.{ext}"))));
    }
    Ok(csvs
        .into_iter()
        .map(|id| {
            let csv = dir.join(format!("{id}.csv"));
            let json = dir.join(format!("{id}.json"));
            (id, csv, json)
        })
        .collect())
}

/// Loads every trial in `dir`, sorted by id.
pub fn load_dataset(dir: &Path) -> Result<Vec<Trial>, IoError> {
    let pairs = dataset_pairs(dir)?;
    let loaded = crate::batch::par_map(&pairs, |(_, csv, json)| load_trial(csv, json));
    let trials = loaded.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut seen = BTreeSet::new();
    for t in &trials {
        if !seen.insert(t.id.as_str()) {
            return Err(IoError::DuplicateId(t.id.clone()));
        }
    }
    let mut trials = trials;
    trials.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(trials)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Listing of the trials in a dataset directory. Paths are relative to the
/// directory holding the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub trials: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn from_ids<'a>(name: impl Into<String>, ids: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            name: name.into(),
            trials: ids
                .into_iter()
                .map(|id| ManifestEntry {
                    id: id.to_string(),
                    csv: PathBuf::from(format!("{id}.csv")),
                    json: PathBuf::from(format!("{id}.json")),
                })
                .collect(),
        }
    }

    /// Checks id uniqueness and that every referenced file exists under `dir`.
    pub fn verify(&self, dir: &Path) -> Result<(), IoError> {
        let mut seen = BTreeSet::new();
        for e in &self.trials {
            if !seen.insert(&e.id) {
                return Err(IoError::DuplicateId(e.id.clone()));
            }
            for p in [&e.csv, &e.json] {
                let full = dir.join(p);
                if !full.is_file() {
                    return Err(IoError::Io {
                        path: full,
                        source: std::io::Error::new(std::io::ErrorKind::NotFound, "missing trial file"),
                    });
                }
            }
        }
        Ok(())
    }
}

pub const PREDICTIONS_HEADER: &str = "trial_id,fixation_index,line";

/// One row per fixation: `trial_id,fixation_index,line`, in the given order.
pub fn predictions_csv(assignments: &[Assignment]) -> String {
    let mut out = String::from(PREDICTIONS_HEADER);
    out.push('\n');
    for a in assignments {
        for (i, l) in a.lines.iter().enumerate() {
            let _ = writeln!(out, "{},{i},{l}", a.trial_id);
        }
    }
    out
}

/// Parses a predictions file. Rows of one trial must be contiguous and their
/// fixation indices must run 0, 1, 2, ...
pub fn parse_predictions(text: &str, path: &Path, source: Source) -> Result<Vec<Assignment>, IoError> {
    let parse_err = |line: usize, message: String| IoError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == PREDICTIONS_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header {PREDICTIONS_HEADER:?}"))),
    }
    let mut out: Vec<Assignment> = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in lines {
        let lineno = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 3 {
            return Err(parse_err(lineno, format!("expected 3 columns, found {}", cols.len())));
        }
        let index: usize = cols[1].parse().map_err(|e| parse_err(lineno, format!("fixation_index: {e}")))?;
        let line: usize = cols[2].parse().map_err(|e| parse_err(lineno, format!("line: {e}")))?;
        let id = cols[0];
        match out.last_mut() {
            Some(a) if a.trial_id == id => {
                if index != a.lines.len() {
                    return Err(parse_err(lineno, format!("expected fixation_index {}, found {index}", a.lines.len())));
                }
                a.lines.push(line);
            }
            _ => {
                if !seen.insert(id.to_string()) {
                    return Err(parse_err(lineno, format!("rows of trial {id} are not contiguous")));
                }
                if index != 0 {
                    return Err(parse_err(lineno, format!("trial {id} starts at fixation_index {index}")));
                }
                out.push(Assignment::new(id, vec![line], source));
            }
        }
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, assignments: &[Assignment]) -> Result<(), IoError> {
    fs::write(path, predictions_csv(assignments)).map_err(io_err(path))
}

pub fn read_predictions(path: &Path, source: Source) -> Result<Vec<Assignment>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_predictions(&text, path, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::tests::row_boxes;

    fn sample() -> Trial {
        let mut boxes = row_boxes(0, 0.0, 50.0, "ab cd", 100.0, 10.0);
        boxes.extend(row_boxes(1, 60.0, 110.0, "éfg h", 100.0, 10.0));
        let mut unlabeled = Fixation::new(130.5, 70.0, 300, 180);
        unlabeled.discarded = true;
        Trial {
            id: "t01".into(),
            dataset: "demo".into(),
            fixations: vec![Fixation::new(512.25, 33.0, 0, 221).with_gold(0), unlabeled],
            stimulus: Stimulus::new(boxes, 2).unwrap(),
            metadata: BTreeMap::from([("font".to_string(), "mono".to_string())]),
        }
    }

    #[test]
    fn csv_rows_are_pinned() {
        let csv = fixations_csv(&sample().fixations);
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], CSV_HEADER);
        assert_eq!(rows[1], "512.25,33.0,0,221,0,0");
        assert_eq!(rows[2], "130.5,70.0,300,180,,1");
    }

    #[test]
    fn json_key_order() {
        let json = trial_json(&sample());
        let keys = ["\"id\"", "\"dataset\"", "\"line_count\"", "\"metadata\"", "\"chars\""];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn round_trip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let t = sample();
        let (csv, json) = save_trial(&t, dir.path()).unwrap();
        let first = (fs::read(&csv).unwrap(), fs::read(&json).unwrap());
        assert_eq!(load_trial(&csv, &json).unwrap(), t);
        save_trial(&t, dir.path()).unwrap();
        assert_eq!(first, (fs::read(&csv).unwrap(), fs::read(&json).unwrap()));
    }

    #[test]
    fn five_columns_is_parse_error() {
        let text = format!("{CSV_HEADER}\n1.0,2.0,0,100,0\n");
        let err = parse_fixations(&text, Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn line_count_mismatch_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let (csv, json) = save_trial(&sample(), dir.path()).unwrap();
        let text = fs::read_to_string(&json).unwrap().replacen("\"line\": 1", "\"line\": 3", 1);
        fs::write(&json, text).unwrap();
        assert!(matches!(load_trial(&csv, &json), Err(IoError::Validation { .. })));
    }

    #[test]
    fn dataset_ordering_orphans_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_dataset(dir.path()).unwrap().is_empty());
        for id in ["c", "a", "b"] {
            let mut t = sample();
            t.id = id.into();
            save_trial(&t, dir.path()).unwrap();
        }
        fs::write(dir.path().join(MANIFEST_FILE), "{}").unwrap();
        fs::write(dir.path().join("a.png"), [0u8]).unwrap();
        let ids: Vec<_> = load_dataset(dir.path()).unwrap().into_iter().map(|t| t.id).collect();
        assert_eq!(ids, ["a", "b", "c"]);

        fs::write(dir.path().join("zz.csv"), CSV_HEADER).unwrap();
        match load_dataset(dir.path()) {
            Err(IoError::OrphanFile(p)) => assert!(p.ends_with("zz.csv")),
            other => panic!("expected orphan error, got {other:?}"),
        }
    }

    #[test]
    fn manifest_verify() {
        let dir = tempfile::tempdir().unwrap();
        save_trial(&sample(), dir.path()).unwrap();
        let m = DatasetManifest::from_ids("demo", ["t01"]);
        m.verify(dir.path()).unwrap();
        let missing = DatasetManifest::from_ids("demo", ["t01", "t02"]);
        assert!(missing.verify(dir.path()).is_err());
        let dup = DatasetManifest::from_ids("demo", ["t01", "t01"]);
        assert!(matches!(dup.verify(dir.path()), Err(IoError::DuplicateId(_))));
    }

    #[test]
    fn predictions_round_trip() {
        let a = vec![
            Assignment::new("t1", vec![0, 1, 1], Source::Woc),
            Assignment::new("t2", vec![2], Source::Woc),
        ];
        let csv = predictions_csv(&a);
        assert!(csv.starts_with("trial_id,fixation_index,line\nt1,0,0\nt1,1,1\n"));
        assert_eq!(parse_predictions(&csv, Path::new("p.csv"), Source::Woc).unwrap(), a);
    }

    #[test]
    fn predictions_reject_gaps_and_interleaving() {
        let p = Path::new("p.csv");
        let gap = "trial_id,fixation_index,line\nt1,0,0\nt1,2,0\n";
        assert!(matches!(parse_predictions(gap, p, Source::Woc), Err(IoError::Parse { line: 3, .. })));
        let split = "trial_id,fixation_index,line\nt1,0,0\nt2,0,0\nt1,1,0\n";
        assert!(parse_predictions(split, p, Source::Woc).is_err());
        assert!(parse_predictions("a,b\n", p, Source::Woc).is_err());
    }
}
