//! Cuts the sequence into runs at return sweeps and vertical jumps, then groups
//! runs with similar mean height, longest runs first. Groups are merged until
//! no more remain than lines and then mapped to lines in vertical order.

use serde::{Deserialize, Serialize};

use super::{check_positive, mean, ordered_lines, runs_from_starts, AlgoResult, Validate};
use crate::trial::Trial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceParams {
    pub x_thresh: f64,
    pub y_thresh: f64,
    /// Fraction of the line spacing within which a run joins an existing group.
    pub w_thresh: f64,
}

impl Default for SliceParams {
    fn default() -> Self {
        Self {
            x_thresh: 192.0,
            y_thresh: 32.0,
            w_thresh: 0.5,
        }
    }
}

impl Validate for SliceParams {
    fn validate(&self) -> Result<(), String> {
        check_positive("x_thresh", self.x_thresh)?;
        check_positive("y_thresh", self.y_thresh)?;
        check_positive("w_thresh", self.w_thresh)
    }
}

struct Group {
    sum_y: f64,
    count: f64,
    members: Vec<usize>,
}

impl Group {
    fn mean(&self) -> f64 {
        self.sum_y / self.count
    }
}

fn median_spacing(centers: &[f64]) -> f64 {
    let mut d: Vec<f64> = centers.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    let k = d.len();
    if k % 2 == 1 { d[k / 2] } else { 0.5 * (d[k / 2 - 1] + d[k / 2]) }
}

pub(super) fn correct(trial: &Trial, p: &SliceParams) -> AlgoResult {
    let fx = &trial.fixations;
    let centers = trial.stimulus.line_centers();
    let join = p.w_thresh * median_spacing(&centers);
    let starts: Vec<usize> = (1..fx.len())
        .filter(|&i| fx[i].x - fx[i - 1].x < -p.x_thresh || (fx[i].y - fx[i - 1].y).abs() > p.y_thresh)
        .collect();
    let mut runs = runs_from_starts(fx.len(), &starts);
    // Longest first; the sort is stable so earlier runs win ties.
    runs.sort_by_key(|r| std::cmp::Reverse(r.len()));

    let mut groups: Vec<Group> = Vec::new();
    for run in runs {
        let run_mean = mean(fx[run.clone()].iter().map(|f| f.y));
        let nearest = groups
            .iter()
            .enumerate()
            .map(|(g, grp)| (g, (grp.mean() - run_mean).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((g, d)) if d <= join => {
                groups[g].sum_y += run_mean * run.len() as f64;
                groups[g].count += run.len() as f64;
                groups[g].members.extend(run);
            }
            _ => groups.push(Group {
                sum_y: run_mean * run.len() as f64,
                count: run.len() as f64,
                members: run.collect(),
            }),
        }
    }

    groups.sort_by(|a, b| a.mean().total_cmp(&b.mean()));
    while groups.len() > centers.len() {
        let k = (0..groups.len() - 1)
            .min_by(|&a, &b| {
                (groups[a + 1].mean() - groups[a].mean()).total_cmp(&(groups[b + 1].mean() - groups[b].mean()))
            })
            .expect("at least two groups");
        let upper = groups.remove(k + 1);
        groups[k].sum_y += upper.sum_y;
        groups[k].count += upper.count;
        groups[k].members.extend(upper.members);
    }

    let means: Vec<f64> = groups.iter().map(Group::mean).collect();
    let weights: Vec<f64> = groups.iter().map(|g| g.count).collect();
    let lines = ordered_lines(&means, &weights, &centers);
    let mut out = vec![0; fx.len()];
    for (g, line) in groups.iter().zip(lines) {
        for &i in &g.members {
            out[i] = line;
        }
    }
    Ok(out)
}
