//! k-means on fixation y with one cluster per line; clusters ranked by mean y
//! give the line number.

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_1d, KMeansOptions};
use super::{AlgoResult, Failure, Validate};
use crate::trial::Trial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        let d = KMeansOptions::default();
        Self {
            max_iter: d.max_iter,
            restarts: d.restarts,
            seed: d.seed,
        }
    }
}

impl Validate for ClusterParams {
    fn validate(&self) -> Result<(), String> {
        if self.max_iter == 0 || self.restarts == 0 {
            return Err("max_iter and restarts must be at least 1".into());
        }
        Ok(())
    }
}

pub(super) fn correct(trial: &Trial, p: &ClusterParams) -> AlgoResult {
    let m = trial.line_count();
    if m > trial.fixations.len() {
        return Err(Failure::new(format!(
            "cluster: {m} lines but only {} fixations",
            trial.fixations.len()
        )));
    }
    let ys: Vec<f64> = trial.fixations.iter().map(|f| f.y).collect();
    let opts = KMeansOptions {
        max_iter: p.max_iter,
        restarts: p.restarts,
        seed: p.seed,
    };
    kmeans_1d(&ys, m, opts)
        .map(|fit| fit.labels)
        .ok_or_else(|| Failure::new("cluster: fewer distinct y values than lines"))
}

#[cfg(test)]
mod tests {
    use super::super::tests::{stimulus, trial_from};
    use super::*;

    #[test]
    fn two_line_example() {
        let t = trial_from(stimulus(2, 60.0, "ab"), &[(0.0, 10.0), (5.0, 12.0), (0.0, 70.0), (5.0, 72.0)]);
        assert_eq!(correct(&t, &ClusterParams::default()), Ok(vec![0, 0, 1, 1]));
    }

    #[test]
    fn identical_y_is_a_failure() {
        let t = trial_from(stimulus(2, 60.0, "ab"), &[(0.0, 10.0), (5.0, 10.0), (9.0, 10.0)]);
        assert!(correct(&t, &ClusterParams::default()).is_err());
        let short = trial_from(stimulus(3, 60.0, "ab"), &[(0.0, 10.0), (5.0, 100.0)]);
        assert!(correct(&short, &ClusterParams::default()).is_err());
    }
}
