use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use driftlab_core::correctors::{apply_corrector, Algorithm, CorrectorSpec};
use driftlab_core::io::{load_dataset, read_predictions, MANIFEST_FILE};
use driftlab_core::trial::{Assignment, Source, Trial};
use driftlab_core::woc::{disagreement, vote, Disagreement, PoolConfig, PoolEntry};

use crate::ReviewError;

/// One trial with everything precomputed for review.
#[derive(Debug, Clone)]
pub struct TrialEntry {
    pub trial: Trial,
    /// Loaded assignments keyed by source name.
    pub sources: BTreeMap<String, Vec<usize>>,
    /// The voted assignment that overrides are applied on top of.
    pub woc: Vec<usize>,
    pub disagreement: Disagreement,
}

/// A dataset plus the run outputs loaded read-only at startup.
#[derive(Debug, Clone, Default)]
pub struct ReviewData {
    entries: BTreeMap<String, TrialEntry>,
}

/// Voting weight of a source when no `woc.csv` was supplied.
fn default_weight(source: Source) -> u32 {
    match source {
        Source::Edist => 3,
        _ => 1,
    }
}

impl ReviewData {
    /// Reads the dataset in `data_dir` and every `<source>.csv` predictions
    /// file in `runs_dir`. A `woc.csv` run is used as the voted assignment;
    /// otherwise the vote is taken over the other loaded sources, with the
    /// model ensemble weighted 3. Trials without any source fall back to
    /// `attach`.
    pub fn load(data_dir: &Path, runs_dir: Option<&Path>) -> Result<Self, ReviewError> {
        let trials = load_dataset(data_dir)?;
        let mut runs: BTreeMap<Source, BTreeMap<String, Assignment>> = BTreeMap::new();
        if let Some(dir) = runs_dir {
            let mut paths: Vec<_> = fs::read_dir(dir)
                .map_err(|source| ReviewError::Log {
                    path: dir.to_path_buf(),
                    source,
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "csv") && p.file_name().is_some_and(|n| n != MANIFEST_FILE))
                .collect();
            paths.sort();
            for path in paths {
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let source = Source::parse(&name).ok_or_else(|| ReviewError::UnknownSource {
                    path: path.clone(),
                    name: name.clone(),
                })?;
                let assignments = read_predictions(&path, source)?;
                runs.insert(source, assignments.into_iter().map(|a| (a.trial_id.clone(), a)).collect());
            }
        }
        Self::from_parts(trials, runs)
    }

    pub fn from_parts(
        trials: Vec<Trial>,
        runs: BTreeMap<Source, BTreeMap<String, Assignment>>,
    ) -> Result<Self, ReviewError> {
        let mut entries = BTreeMap::new();
        for trial in trials {
            let mut available: BTreeMap<Source, Assignment> = BTreeMap::new();
            for (source, by_trial) in &runs {
                if let Some(a) = by_trial.get(&trial.id) {
                    a.check(&trial).map_err(|message| ReviewError::BadRun {
                        source_name: source.name().to_string(),
                        message,
                    })?;
                    available.insert(*source, a.clone());
                }
            }
            let voters: Vec<PoolEntry> = available
                .keys()
                .filter(|s| **s != Source::Woc)
                .map(|&s| PoolEntry {
                    source: s,
                    weight: default_weight(s),
                })
                .collect();
            let pool = if voters.is_empty() {
                let attach = apply_corrector(&trial, &CorrectorSpec::new(Algorithm::Attach)).map_err(|e| {
                    ReviewError::BadRun {
                        source_name: "attach".into(),
                        message: e.to_string(),
                    }
                })?;
                available.entry(attach.source).or_insert(attach);
                PoolConfig(vec![PoolEntry {
                    source: Source::Algorithm(Algorithm::Attach),
                    weight: 1,
                }])
                .resolve(&trial.id, &available)
            } else {
                PoolConfig(voters).resolve(&trial.id, &available)
            }
            .map_err(|e| ReviewError::BadRun {
                source_name: "woc".into(),
                message: e.to_string(),
            })?;
            let woc = match available.get(&Source::Woc) {
                Some(a) => a.lines.clone(),
                None => vote(&pool).lines,
            };
            let entry = TrialEntry {
                sources: available.iter().map(|(s, a)| (s.name().to_string(), a.lines.clone())).collect(),
                woc,
                disagreement: disagreement(&pool),
                trial,
            };
            entries.insert(entry.trial.id.clone(), entry);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, id: &str) -> Option<&TrialEntry> {
        self.entries.get(id)
    }

    /// Entries in id order.
    pub fn entries(&self) -> impl Iterator<Item = &TrialEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
