//! Accuracy against gold labels, relative accuracy and row-normalized
//! confusion matrices. Discarded fixations never count.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::trial::{Assignment, Source, Trial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("trial {0} has unlabeled fixations")]
    UnlabeledTrial(String),
    #[error("trial {0} has no non-discarded fixations")]
    AllDiscarded(String),
    #[error("no trials to evaluate")]
    EmptyDataset,
    #[error("baseline accuracy must be positive, got {0}")]
    ZeroBaseline(f64),
    #[error("prediction does not match trial: {0}")]
    Misaligned(String),
}

fn aligned(pred: &Assignment, trial: &Trial) -> Result<(), EvalError> {
    if pred.lines.len() != trial.fixations.len() {
        return Err(EvalError::Misaligned(format!(
            "{}: {} predictions for {} fixations",
            trial.id,
            pred.lines.len(),
            trial.fixations.len()
        )));
    }
    Ok(())
}

/// Fraction of non-discarded fixations whose predicted line equals gold.
/// Discarded fixations may be unlabeled; every other fixation must be.
pub fn trial_accuracy(pred: &Assignment, trial: &Trial) -> Result<f64, EvalError> {
    aligned(pred, trial)?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (f, &p) in trial.fixations.iter().zip(&pred.lines) {
        if f.discarded {
            continue;
        }
        let gold = f.gold_line.ok_or_else(|| EvalError::UnlabeledTrial(trial.id.clone()))?;
        total += 1;
        hits += usize::from(gold == p);
    }
    if total == 0 {
        return Err(EvalError::AllDiscarded(trial.id.clone()));
    }
    Ok(hits as f64 / total as f64)
}

fn pair_up<'a>(preds: &'a [Assignment], trials: &'a [Trial]) -> Result<Vec<(&'a Assignment, &'a Trial)>, EvalError> {
    let by_id: HashMap<&str, &Assignment> = preds.iter().map(|a| (a.trial_id.as_str(), a)).collect();
    trials
        .iter()
        .map(|t| {
            by_id
                .get(t.id.as_str())
                .map(|a| (*a, t))
                .ok_or_else(|| EvalError::Misaligned(format!("no prediction for trial {}", t.id)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialScore {
    pub trial_id: String,
    pub fixations: usize,
    pub accuracy: f64,
}

/// Accuracy of every trial, in trial order. Predictions are matched by id.
pub fn trial_scores(preds: &[Assignment], trials: &[Trial]) -> Result<Vec<TrialScore>, EvalError> {
    pair_up(preds, trials)?
        .into_iter()
        .map(|(p, t)| {
            Ok(TrialScore {
                trial_id: t.id.clone(),
                fixations: t.fixations.iter().filter(|f| !f.discarded).count(),
                accuracy: trial_accuracy(p, t)?,
            })
        })
        .collect()
}

/// Unweighted mean of per-trial accuracies.
pub fn dataset_accuracy(preds: &[Assignment], trials: &[Trial]) -> Result<f64, EvalError> {
    if trials.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let scores = trial_scores(preds, trials)?;
    Ok(scores.iter().map(|s| s.accuracy).sum::<f64>() / scores.len() as f64)
}

/// `(a_m - a_c) / a_c`.
pub fn relative_accuracy(a_m: f64, a_c: f64) -> Result<f64, EvalError> {
    if a_c.is_nan() || a_c <= 0.0 {
        return Err(EvalError::ZeroBaseline(a_c));
    }
    Ok((a_m - a_c) / a_c)
}

/// `k × k` matrix whose entry `(g, p)` is the share of gold-`g` fixations
/// predicted as `p`. Rows without any gold-`g` fixation are zero. Labels at or
/// beyond `k` are skipped.
pub fn confusion(preds: &[Assignment], trials: &[Trial], k: usize) -> Result<Vec<Vec<f64>>, EvalError> {
    let mut counts = vec![vec![0usize; k]; k];
    for (p, t) in pair_up(preds, trials)? {
        aligned(p, t)?;
        for (f, &line) in t.fixations.iter().zip(&p.lines) {
            if f.discarded {
                continue;
            }
            let gold = f.gold_line.ok_or_else(|| EvalError::UnlabeledTrial(t.id.clone()))?;
            if gold < k && line < k {
                counts[gold][line] += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|row| {
            let n: usize = row.iter().sum();
            row.into_iter()
                .map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSummary {
    pub source: String,
    pub accuracy: f64,
    pub trials: usize,
    /// Relative accuracy against the best classical algorithm, for sources
    /// that are not themselves classical algorithms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_to_best_classical: Option<f64>,
    pub confusion: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestClassical {
    pub source: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub trials: usize,
    pub max_lines: usize,
    pub sources: Vec<SourceSummary>,
    pub best_classical: Option<BestClassical>,
    #[serde(skip)]
    pub per_trial: BTreeMap<String, Vec<TrialScore>>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `source,trial_id,fixations,accuracy`, one row per source and trial.
    pub fn per_trial_csv(&self) -> String {
        let mut out = String::from("source,trial_id,fixations,accuracy\n");
        for (source, scores) in &self.per_trial {
            for s in scores {
                let _ = writeln!(out, "{source},{},{},{:?}", s.trial_id, s.fixations, s.accuracy);
            }
        }
        out
    }
}

/// Scores every named prediction set against `trials`. Sources whose name is
/// a classical algorithm compete for the best-classical baseline; every other
/// source is also reported relative to that baseline.
pub fn evaluate_sources(
    dataset: &str,
    preds: &BTreeMap<String, Vec<Assignment>>,
    trials: &[Trial],
) -> Result<EvaluationReport, EvalError> {
    if trials.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let k = trials.iter().map(Trial::line_count).max().unwrap_or(0);
    let mut sources = Vec::new();
    let mut per_trial = BTreeMap::new();
    for (name, p) in preds {
        let scores = trial_scores(p, trials)?;
        let accuracy = scores.iter().map(|s| s.accuracy).sum::<f64>() / scores.len() as f64;
        sources.push(SourceSummary {
            source: name.clone(),
            accuracy,
            trials: scores.len(),
            relative_to_best_classical: None,
            confusion: confusion(p, trials, k)?,
        });
        per_trial.insert(name.clone(), scores);
    }
    let is_classical = |name: &str| matches!(Source::parse(name), Some(Source::Algorithm(_)));
    // Highest accuracy wins; the alphabetically first name breaks ties.
    let best_classical = sources
        .iter()
        .filter(|s| is_classical(&s.source))
        .fold(None::<&SourceSummary>, |b, s| match b {
            Some(b) if b.accuracy >= s.accuracy => Some(b),
            _ => Some(s),
        })
        .map(|s| BestClassical {
            source: s.source.clone(),
            accuracy: s.accuracy,
        });
    if let Some(best) = &best_classical {
        for s in sources.iter_mut().filter(|s| !is_classical(&s.source)) {
            s.relative_to_best_classical = relative_accuracy(s.accuracy, best.accuracy).ok();
        }
    }
    Ok(EvaluationReport {
        dataset: dataset.to_string(),
        trials: trials.len(),
        max_lines: k,
        sources,
        best_classical,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::correctors::tests::{stimulus, trial_from};
    use crate::correctors::Algorithm;

    fn labeled(id: &str, gold: &[usize]) -> Trial {
        let pts: Vec<(f64, f64)> = gold.iter().map(|&g| (5.0, 25.0 + 50.0 * g as f64)).collect();
        let mut t = trial_from(stimulus(4, 50.0, "abc"), &pts);
        t.id = id.into();
        for (f, &g) in t.fixations.iter_mut().zip(gold) {
            f.gold_line = Some(g);
        }
        t
    }

    fn pred(id: &str, lines: &[usize]) -> Assignment {
        Assignment::new(id, lines.to_vec(), Source::Woc)
    }

    #[test]
    fn trial_accuracy_examples() {
        let mut t = labeled("a", &[0, 1, 2, 2]);
        let p = pred("a", &[0, 1, 1, 2]);
        assert_eq!(trial_accuracy(&p, &t).unwrap(), 0.75);
        assert_eq!(trial_accuracy(&pred("a", &[0, 1, 2, 2]), &t).unwrap(), 1.0);
        t.fixations[2].discarded = true;
        t.fixations[2].gold_line = None;
        assert_eq!(trial_accuracy(&p, &t).unwrap(), 1.0);
    }

    #[test]
    fn trial_accuracy_errors() {
        let mut t = labeled("a", &[0, 1]);
        t.fixations[0].gold_line = None;
        assert_eq!(trial_accuracy(&pred("a", &[0, 1]), &t), Err(EvalError::UnlabeledTrial("a".into())));
        let mut t = labeled("b", &[0]);
        t.fixations[0].discarded = true;
        assert_eq!(trial_accuracy(&pred("b", &[0]), &t), Err(EvalError::AllDiscarded("b".into())));
        assert!(matches!(trial_accuracy(&pred("b", &[0, 0]), &labeled("b", &[0])), Err(EvalError::Misaligned(_))));
    }

    #[test]
    fn dataset_accuracy_is_a_trial_mean() {
        let trials = vec![labeled("a", &[0]), labeled("b", &[1, 1, 1])];
        let preds = vec![pred("b", &[0, 0, 0]), pred("a", &[0])];
        assert_eq!(dataset_accuracy(&preds, &trials).unwrap(), 0.5);
        // Pooling fixations would give 1/4.
        let trials = vec![labeled("a", &[0, 1]), labeled("b", &[0, 0])];
        let preds = vec![pred("a", &[0, 1]), pred("b", &[0, 1])];
        assert_eq!(dataset_accuracy(&preds, &trials).unwrap(), 0.75);
        assert_eq!(dataset_accuracy(&preds[..1], &trials[..1]).unwrap(), 1.0);
        assert_eq!(dataset_accuracy(&[], &[]), Err(EvalError::EmptyDataset));
        assert!(matches!(dataset_accuracy(&[], &trials), Err(EvalError::Misaligned(_))));
    }

    #[test]
    fn relative_accuracy_examples() {
        let r = relative_accuracy(98.17, 96.75).unwrap();
        assert!((r - (98.17 - 96.75) / 96.75).abs() < 1e-15);
        assert!((r - 0.014677).abs() < 1e-6);
        assert_eq!(relative_accuracy(0.9, 0.9).unwrap(), 0.0);
        assert_eq!(relative_accuracy(50.0, 100.0).unwrap(), -0.5);
        assert!(matches!(relative_accuracy(1.0, 0.0), Err(EvalError::ZeroBaseline(_))));
    }

    #[test]
    fn confusion_examples() {
        let trials = vec![labeled("a", &[0, 1, 2])];
        let m = confusion(&[pred("a", &[0, 1, 2])], &trials, 4).unwrap();
        assert_eq!(m[0], vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m[3], vec![0.0; 4]);
        let trials = vec![labeled("a", &[0])];
        assert_eq!(confusion(&[pred("a", &[1])], &trials, 3).unwrap()[0], vec![0.0, 1.0, 0.0]);
        let trials = vec![labeled("a", &[0, 0, 0, 1]), labeled("b", &[1, 2])];
        let m = confusion(&[pred("a", &[0, 1, 1, 1]), pred("b", &[2, 2])], &trials, 3).unwrap();
        assert_eq!(m[0], vec![1.0 / 3.0, 2.0 / 3.0, 0.0]);
        assert_eq!(m[1], vec![0.0, 0.5, 0.5]);
        assert_eq!(m[2], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn report_picks_best_classical() {
        let trials = vec![labeled("a", &[0, 1, 2, 3])];
        let mut preds = BTreeMap::new();
        preds.insert(Algorithm::Attach.name().to_string(), vec![pred("a", &[0, 1, 2, 2])]);
        preds.insert(Algorithm::Warp.name().to_string(), vec![pred("a", &[0, 1, 1, 1])]);
        preds.insert("woc".to_string(), vec![pred("a", &[0, 1, 2, 3])]);
        let r = evaluate_sources("demo", &preds, &trials).unwrap();
        let best = r.best_classical.as_ref().unwrap();
        assert_eq!((best.source.as_str(), best.accuracy), ("attach", 0.75));
        let woc = r.sources.iter().find(|s| s.source == "woc").unwrap();
        assert!((woc.relative_to_best_classical.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(r.sources.iter().find(|s| s.source == "warp").unwrap().relative_to_best_classical.is_none());
        assert_eq!(r.per_trial_csv().lines().count(), 4);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["best_classical"]["source"], "attach");
    }
}
