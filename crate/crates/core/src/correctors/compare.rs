//! Splits the sequence into sweeps at long leftward movements and matches each
//! sweep's horizontal pattern against the word positions of the few lines
//! nearest to it, using dynamic time warping.

use serde::{Deserialize, Serialize};

use super::dtw::dtw_distance_1d;
use super::{check_positive, mean, runs_from_starts, AlgoResult, Failure, Validate};
use crate::trial::Trial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareParams {
    pub x_thresh: f64,
    pub n_nearest: usize,
}

impl Default for CompareParams {
    fn default() -> Self {
        Self {
            x_thresh: 512.0,
            n_nearest: 3,
        }
    }
}

impl Validate for CompareParams {
    fn validate(&self) -> Result<(), String> {
        check_positive("x_thresh", self.x_thresh)?;
        if self.n_nearest == 0 {
            return Err("n_nearest must be at least 1".into());
        }
        Ok(())
    }
}

pub(super) fn correct(trial: &Trial, p: &CompareParams) -> AlgoResult {
    let fx = &trial.fixations;
    let centers = trial.stimulus.line_centers();
    let mut word_x: Vec<Vec<f64>> = vec![Vec::new(); centers.len()];
    for w in trial.stimulus.words() {
        word_x[w.line].push(w.center_x());
    }
    let starts: Vec<usize> = (1..fx.len()).filter(|&i| fx[i].x - fx[i - 1].x < -p.x_thresh).collect();
    let mut out = vec![0; fx.len()];
    for sweep in runs_from_starts(fx.len(), &starts) {
        let my = mean(fx[sweep.clone()].iter().map(|f| f.y));
        let mut by_distance: Vec<usize> = (0..centers.len()).filter(|&l| !word_x[l].is_empty()).collect();
        by_distance.sort_by(|&a, &b| (centers[a] - my).abs().total_cmp(&(centers[b] - my).abs()).then(a.cmp(&b)));
        let xs: Vec<f64> = fx[sweep.clone()].iter().map(|f| f.x).collect();
        let best = by_distance
            .iter()
            .take(p.n_nearest)
            .map(|&l| (l, dtw_distance_1d(&xs, &word_x[l])))
            .fold(None, |b: Option<(usize, f64)>, c| if b.is_none_or(|b| c.1 < b.1) { Some(c) } else { b });
        let (line, _) = best.ok_or_else(|| Failure::new("compare: stimulus has no words"))?;
        out[sweep].fill(line);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{reading_trial, stimulus, trial_from};
    use super::*;
    use crate::trial::tests::row_boxes;
    use crate::trial::Stimulus;

    #[test]
    fn clean_reading_is_exact() {
        let (t, gold) = reading_trial(4, 50.0, "a reasonably long line of text for sweeps here", |_| 0.0);
        assert_eq!(correct(&t, &CompareParams::default()), Ok(gold));
    }

    #[test]
    fn word_pattern_beats_vertical_position() {
        // Line 0 has short words, line 1 has long ones. A sweep sitting on
        // line 0's height but matching line 1's word layout goes to line 1.
        let short = "ab cd ef gh ij kl mn op qr st uv wx yz ab cd ef gh ij kl mn op qr st";
        let long = "abcdefghijklmnopqrst abcdefghijklmnopqrst abcdefghijklmnopqrst";
        let mut boxes = row_boxes(0, 0.0, 50.0, short, 0.0, 14.0);
        boxes.extend(row_boxes(1, 50.0, 100.0, long, 0.0, 14.0));
        let s = Stimulus::new(boxes, 2).unwrap();
        let long_centers: Vec<f64> = s.words().iter().filter(|w| w.line == 1).map(|w| w.center_x()).collect();
        let pts: Vec<(f64, f64)> = long_centers.iter().map(|&x| (x, 30.0)).collect();
        let t = trial_from(s, &pts);
        let p = CompareParams::default();
        assert_eq!(correct(&t, &p), Ok(vec![1; pts.len()]));
        let nearest_only = CompareParams { n_nearest: 1, ..p };
        assert_eq!(correct(&t, &nearest_only), Ok(vec![0; pts.len()]));
    }

    #[test]
    fn sweeps_split_on_long_returns() {
        let text = "aaaaaaaaaaaa bbbbbbbbbbbb cccccccccccc dddddddddddd eeeeeeeeeeee";
        let t = trial_from(stimulus(2, 50.0, text), &[(80.0, 20.0), (700.0, 20.0), (80.0, 80.0), (700.0, 80.0)]);
        assert_eq!(correct(&t, &CompareParams::default()), Ok(vec![0, 0, 1, 1]));
    }
}
