//! Consecutive fixations close in both x and y form a chain; each chain goes
//! to the line nearest its mean y.

use serde::{Deserialize, Serialize};

use super::{check_positive, mean, runs_from_starts, Validate};
use crate::trial::{nearest_index, Trial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainParams {
    pub x_thresh: f64,
    pub y_thresh: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            x_thresh: 192.0,
            y_thresh: 35.0,
        }
    }
}

impl Validate for ChainParams {
    fn validate(&self) -> Result<(), String> {
        check_positive("x_thresh", self.x_thresh)?;
        check_positive("y_thresh", self.y_thresh)
    }
}

pub(super) fn correct(trial: &Trial, p: &ChainParams) -> Vec<usize> {
    let fx = &trial.fixations;
    let starts: Vec<usize> = (1..fx.len())
        .filter(|&i| (fx[i].x - fx[i - 1].x).abs() > p.x_thresh || (fx[i].y - fx[i - 1].y).abs() > p.y_thresh)
        .collect();
    let centers = trial.stimulus.line_centers();
    let mut lines = vec![0; fx.len()];
    for run in runs_from_starts(fx.len(), &starts) {
        let line = nearest_index(&centers, mean(fx[run.clone()].iter().map(|f| f.y)));
        lines[run].fill(line);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::super::tests::{stimulus, trial_from};
    use super::*;

    #[test]
    fn chain_mean_decides_the_line() {
        // Centers 25, 75, 125. The first chain drifts but its mean (40) stays on line 0;
        // a 40 px vertical jump starts a new chain with mean 95 -> line 1.
        let pts = [(10.0, 20.0), (60.0, 45.0), (110.0, 55.0), (150.0, 95.0), (190.0, 95.0)];
        let t = trial_from(stimulus(3, 50.0, "abcdefghijklmn"), &pts);
        assert_eq!(correct(&t, &ChainParams::default()), vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn long_horizontal_jump_breaks_a_chain() {
        let pts = [(10.0, 40.0), (300.0, 60.0)];
        let t = trial_from(stimulus(2, 50.0, "abcdefghijklmn"), &pts);
        assert_eq!(correct(&t, &ChainParams::default()), vec![0, 1]);
        let wide = ChainParams { x_thresh: 500.0, ..Default::default() };
        assert_eq!(correct(&t, &wide), vec![0, 0]);
    }
}
