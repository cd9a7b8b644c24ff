//! Builds short progressive sequences and repeatedly merges the pair whose
//! union is best fitted by a straight line, under constraints that are relaxed
//! phase by phase until one sequence per line remains.

use serde::{Deserialize, Serialize};

use super::{check_positive, ordered_lines, runs_from_starts, AlgoResult, Failure, Validate};
use crate::trial::Trial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeParams {
    pub y_thresh: f64,
    pub gradient_thresh: f64,
    pub error_thresh: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        Self {
            y_thresh: 32.0,
            gradient_thresh: 0.1,
            error_thresh: 20.0,
        }
    }
}

impl Validate for MergeParams {
    fn validate(&self) -> Result<(), String> {
        check_positive("y_thresh", self.y_thresh)?;
        check_positive("gradient_thresh", self.gradient_thresh)?;
        check_positive("error_thresh", self.error_thresh)
    }
}

/// (minimum length of the first sequence, of the second, constraints lifted)
const PHASES: [(usize, usize, bool); 4] = [(3, 3, false), (1, 3, false), (1, 1, false), (1, 1, true)];

/// Sufficient statistics for a least-squares line fit.
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

impl Stats {
    fn add(self, o: Stats) -> Stats {
        Stats {
            n: self.n + o.n,
            sx: self.sx + o.sx,
            sy: self.sy + o.sy,
            sxx: self.sxx + o.sxx,
            sxy: self.sxy + o.sxy,
            syy: self.syy + o.syy,
        }
    }

    fn point(x: f64, y: f64) -> Stats {
        Stats {
            n: 1.0,
            sx: x,
            sy: y,
            sxx: x * x,
            sxy: x * y,
            syy: y * y,
        }
    }

    /// Slope and root mean squared residual. A vertical or single-point set has
    /// slope 0.
    fn fit(&self) -> (f64, f64) {
        let cxx = self.sxx - self.sx * self.sx / self.n;
        let cxy = self.sxy - self.sx * self.sy / self.n;
        let cyy = self.syy - self.sy * self.sy / self.n;
        let (slope, ss) = if cxx > 1e-9 * self.n { (cxy / cxx, cyy - cxy * cxy / cxx) } else { (0.0, cyy) };
        (slope, (ss.max(0.0) / self.n).sqrt())
    }
}

struct Sequence {
    members: Vec<usize>,
    stats: Stats,
}

pub(super) fn correct(trial: &Trial, p: &MergeParams) -> AlgoResult {
    let fx = &trial.fixations;
    let m = trial.line_count();
    // Coordinates relative to the first fixation keep the summed squares well
    // conditioned and are unchanged, bit for bit, by translating the trial.
    let (cx, cy) = (fx[0].x, fx[0].y);
    let starts: Vec<usize> = (1..fx.len())
        .filter(|&i| fx[i].x < fx[i - 1].x || (fx[i].y - fx[i - 1].y).abs() > p.y_thresh)
        .collect();
    let mut seqs: Vec<Sequence> = runs_from_starts(fx.len(), &starts)
        .into_iter()
        .map(|r| Sequence {
            stats: r.clone().fold(Stats::default(), |s, i| s.add(Stats::point(fx[i].x - cx, fx[i].y - cy))),
            members: r.collect(),
        })
        .collect();

    for (min_i, min_j, unconstrained) in PHASES {
        while seqs.len() > m {
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..seqs.len() {
                if seqs[i].members.len() < min_i {
                    continue;
                }
                for j in 0..seqs.len() {
                    if i == j || seqs[j].members.len() < min_j {
                        continue;
                    }
                    let (slope, error) = seqs[i].stats.add(seqs[j].stats).fit();
                    if !unconstrained && (slope.abs() >= p.gradient_thresh || error >= p.error_thresh) {
                        continue;
                    }
                    if best.is_none_or(|b| error < b.0) {
                        best = Some((error, i.min(j), i.max(j)));
                    }
                }
            }
            let Some((_, a, b)) = best else { break };
            let absorbed = seqs.remove(b);
            seqs[a].members.extend(absorbed.members);
            seqs[a].stats = seqs[a].stats.add(absorbed.stats);
        }
    }
    if seqs.len() > m {
        return Err(Failure::new(format!("merge: {} sequences left for {m} lines", seqs.len())));
    }

    let means: Vec<f64> = seqs.iter().map(|s| s.stats.sy / s.stats.n + cy).collect();
    let weights: Vec<f64> = seqs.iter().map(|s| s.stats.n).collect();
    let lines = ordered_lines(&means, &weights, &trial.stimulus.line_centers());
    let mut out = vec![0; fx.len()];
    for (seq, line) in seqs.iter().zip(lines) {
        for &i in &seq.members {
            out[i] = line;
        }
    }
    Ok(out)
}
