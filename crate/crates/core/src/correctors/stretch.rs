//! Finds the vertical scale and offset that bring fixations closest to line
//! centers, then assigns each transformed fixation to the nearest line.
//!
//! The transform is `y' = top + scale * (y - top) + offset`, with `top` the
//! upper edge of the stimulus. The cost is the summed absolute distance from
//! every transformed fixation to its nearest line center. An exhaustive grid
//! is refined with a bounded simplex search.

use serde::{Deserialize, Serialize};

use super::simplex::{minimize_in_box, SimplexOptions};
use super::{check_bounds, check_positive, AlgoResult, Validate};
use crate::trial::{nearest_index, Trial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StretchParams {
    pub scale_bounds: [f64; 2],
    pub offset_bounds: [f64; 2],
    pub scale_step: f64,
    pub offset_step: f64,
}

impl Default for StretchParams {
    fn default() -> Self {
        Self {
            scale_bounds: [0.9, 1.1],
            offset_bounds: [-50.0, 50.0],
            scale_step: 0.01,
            offset_step: 1.0,
        }
    }
}

impl Validate for StretchParams {
    fn validate(&self) -> Result<(), String> {
        check_bounds("scale_bounds", self.scale_bounds)?;
        check_bounds("offset_bounds", self.offset_bounds)?;
        check_positive("scale_step", self.scale_step)?;
        check_positive("offset_step", self.offset_step)?;
        if self.scale_bounds[0] <= 0.0 {
            return Err("scale_bounds must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchFit {
    pub scale: f64,
    pub offset: f64,
    pub cost: f64,
}

impl StretchFit {
    pub fn apply(&self, y: f64, top: f64) -> f64 {
        top + self.scale * (y - top) + self.offset
    }
}

pub(crate) fn stretch_cost(ys: &[f64], centers: &[f64], top: f64, scale: f64, offset: f64) -> f64 {
    ys.iter()
        .map(|&y| {
            let t = top + scale * (y - top) + offset;
            centers.iter().map(|c| (t - c).abs()).fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn grid(bounds: [f64; 2], step: f64) -> Vec<f64> {
    let n = ((bounds[1] - bounds[0]) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| bounds[0] + i as f64 * step).collect()
}

pub fn fit_stretch(trial: &Trial, p: &StretchParams) -> StretchFit {
    let ys: Vec<f64> = trial.fixations.iter().map(|f| f.y).collect();
    let centers = trial.stimulus.line_centers();
    let top = trial.stimulus.min_corner().1;
    let mut best = StretchFit {
        scale: 1.0f64.clamp(p.scale_bounds[0], p.scale_bounds[1]),
        offset: 0.0f64.clamp(p.offset_bounds[0], p.offset_bounds[1]),
        cost: f64::INFINITY,
    };
    best.cost = stretch_cost(&ys, &centers, top, best.scale, best.offset);
    for &s in &grid(p.scale_bounds, p.scale_step) {
        for &o in &grid(p.offset_bounds, p.offset_step) {
            let c = stretch_cost(&ys, &centers, top, s, o);
            if c < best.cost {
                best = StretchFit { scale: s, offset: o, cost: c };
            }
        }
    }
    let lower = [p.scale_bounds[0], p.offset_bounds[0]];
    let upper = [p.scale_bounds[1], p.offset_bounds[1]];
    let steps = [p.scale_step / (upper[0] - lower[0]).max(f64::MIN_POSITIVE), p.offset_step / (upper[1] - lower[1]).max(f64::MIN_POSITIVE)];
    let opts = SimplexOptions {
        max_iter: 2000,
        initial_step: steps[0].min(steps[1]).min(0.5),
        ..Default::default()
    };
    let refined = minimize_in_box(
        |x| stretch_cost(&ys, &centers, top, x[0], x[1]),
        &[best.scale, best.offset],
        &lower,
        &upper,
        opts,
    );
    if refined.value < best.cost {
        best = StretchFit {
            scale: refined.x[0],
            offset: refined.x[1],
            cost: refined.value,
        };
    }
    best
}

pub(super) fn correct(trial: &Trial, p: &StretchParams) -> AlgoResult {
    let fit = fit_stretch(trial, p);
    let centers = trial.stimulus.line_centers();
    let top = trial.stimulus.min_corner().1;
    Ok(trial
        .fixations
        .iter()
        .map(|f| nearest_index(&centers, fit.apply(f.y, top)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::tests::reading_trial;
    use super::*;

    #[test]
    fn inverts_a_linear_distortion() {
        let (t, gold) = reading_trial(6, 50.0, "lorem ipsum dolor sit", |y| 0.05 * y + 3.0);
        let fit = fit_stretch(&t, &StretchParams::default());
        assert!((fit.scale - 1.0 / 1.05).abs() < 1e-3, "{fit:?}");
        assert!((fit.offset + 3.0 / 1.05).abs() < 0.1, "{fit:?}");
        assert!(fit.cost < 0.5);
        assert_eq!(correct(&t, &StretchParams::default()), Ok(gold));
    }

    #[test]
    fn no_better_grid_point_exists() {
        let (t, _) = reading_trial(4, 60.0, "a bb ccc", |y| -0.04 * y + 11.0);
        let p = StretchParams::default();
        let fit = fit_stretch(&t, &p);
        let ys: Vec<f64> = t.fixations.iter().map(|f| f.y).collect();
        let centers = t.stimulus.line_centers();
        for i in 0..=80 {
            for j in 0..=200 {
                let (s, o) = (0.9 + 0.0025 * i as f64, -50.0 + 0.5 * j as f64);
                assert!(fit.cost <= stretch_cost(&ys, &centers, 0.0, s, o) + 1e-9);
            }
        }
    }

    #[test]
    fn grid_covers_both_bounds() {
        let g = grid([0.9, 1.1], 0.01);
        assert_eq!(g.len(), 21);
        assert!((g[20] - 1.1).abs() < 1e-12);
    }
}
