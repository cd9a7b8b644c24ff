//! Each fixation goes to the line whose center is nearest in y.

use crate::trial::{nearest_index, Trial};

pub(super) fn correct(trial: &Trial) -> Vec<usize> {
    let centers = trial.stimulus.line_centers();
    trial.fixations.iter().map(|f| nearest_index(&centers, f.y)).collect()
}
