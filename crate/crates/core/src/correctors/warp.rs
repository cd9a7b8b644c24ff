//! Aligns the fixation sequence with the sequence of word centers in reading
//! order by dynamic time warping on Euclidean distance. Each fixation takes the
//! most frequent line among the words it is aligned with.

use super::dtw::dtw;
use super::{AlgoResult, Failure};
use crate::trial::Trial;

pub(super) fn correct(trial: &Trial) -> AlgoResult {
    let fx = &trial.fixations;
    let centers = trial.stimulus.line_centers();
    let words: Vec<(f64, f64, usize)> = trial
        .stimulus
        .words()
        .iter()
        .map(|w| (w.center_x(), centers[w.line], w.line))
        .collect();
    if words.is_empty() {
        return Err(Failure::new("warp: stimulus has no words"));
    }
    let al = dtw(fx.len(), words.len(), |i, j| (fx[i].x - words[j].0).hypot(fx[i].y - words[j].1));
    let m = centers.len();
    let mut votes = vec![vec![0usize; m]; fx.len()];
    for (i, j) in al.path {
        votes[i][words[j].2] += 1;
    }
    Ok(votes
        .iter()
        .map(|v| (0..m).fold(0, |b, l| if v[l] > v[b] { l } else { b }))
        .collect())
}
