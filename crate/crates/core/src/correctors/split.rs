//! Two-means on the horizontal saccade lengths separates progressive from
//! regressive saccades; the sequence is cut at every regressive sweep and each
//! run goes to the line nearest its mean y.

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_1d, KMeansOptions};
use super::{mean, runs_from_starts, AlgoResult, Validate};
use crate::trial::{nearest_index, Trial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitParams {
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SplitParams {
    fn default() -> Self {
        let d = KMeansOptions::default();
        Self {
            max_iter: d.max_iter,
            restarts: d.restarts,
            seed: d.seed,
        }
    }
}

impl Validate for SplitParams {
    fn validate(&self) -> Result<(), String> {
        if self.max_iter == 0 || self.restarts == 0 {
            return Err("max_iter and restarts must be at least 1".into());
        }
        Ok(())
    }
}

pub(super) fn correct(trial: &Trial, p: &SplitParams) -> AlgoResult {
    let fx = &trial.fixations;
    let deltas: Vec<f64> = fx.windows(2).map(|w| w[1].x - w[0].x).collect();
    let opts = KMeansOptions {
        max_iter: p.max_iter,
        restarts: p.restarts,
        seed: p.seed,
    };
    let starts: Vec<usize> = match kmeans_1d(&deltas, 2, opts) {
        // Cluster 0 has the lower centroid; it is a sweep cluster only if it moves left.
        Some(fit) if fit.centroids[0] < 0.0 => fit
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == 0)
            .map(|(i, _)| i + 1)
            .collect(),
        _ => Vec::new(),
    };
    let centers = trial.stimulus.line_centers();
    let mut lines = vec![0; fx.len()];
    for run in runs_from_starts(fx.len(), &starts) {
        let line = nearest_index(&centers, mean(fx[run.clone()].iter().map(|f| f.y)));
        lines[run].fill(line);
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{stimulus, trial_from};
    use super::*;

    #[test]
    fn cuts_at_return_sweeps_only() {
        // Centers 25 and 75. A short regression (-30) stays in the first run.
        let pts = [(10.0, 30.0), (60.0, 45.0), (30.0, 40.0), (110.0, 52.0), (15.0, 60.0), (70.0, 70.0), (120.0, 90.0)];
        let t = trial_from(stimulus(2, 50.0, "abcdefghijklmn"), &pts);
        assert_eq!(correct(&t, &SplitParams::default()), Ok(vec![0, 0, 0, 0, 1, 1, 1]));
    }

    #[test]
    fn all_progressive_is_one_run() {
        let pts = [(10.0, 30.0), (60.0, 30.0), (90.0, 60.0)];
        let t = trial_from(stimulus(2, 50.0, "abcdefghijklmn"), &pts);
        assert_eq!(correct(&t, &SplitParams::default()), Ok(vec![0, 0, 0]));
    }
}
