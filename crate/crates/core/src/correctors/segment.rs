//! Cuts the sequence at the `m - 1` largest leftward x movements; segment `i`
//! becomes line `i`.

use crate::trial::Trial;

pub(super) fn correct(trial: &Trial) -> Vec<usize> {
    let fx = &trial.fixations;
    let m = trial.line_count();
    let mut leftward: Vec<(f64, usize)> = (1..fx.len())
        .map(|i| (fx[i].x - fx[i - 1].x, i))
        .filter(|(dx, _)| *dx < 0.0)
        .collect();
    // Most negative first; earlier index wins ties.
    leftward.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cuts: Vec<usize> = leftward.iter().take(m - 1).map(|&(_, i)| i).collect();
    cuts.sort_unstable();
    let mut lines = Vec::with_capacity(fx.len());
    let mut line = 0;
    let mut next_cut = cuts.iter().peekable();
    for i in 0..fx.len() {
        if next_cut.peek() == Some(&&i) {
            line += 1;
            next_cut.next();
        }
        lines.push(line);
    }
    lines
}
