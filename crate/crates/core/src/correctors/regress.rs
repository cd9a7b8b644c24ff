//! Fits a family of straight line predictions, one per text line, whose
//! vertical displacement grows in proportion to the distance from the top of
//! the passage. Each fixation then goes to the nearest predicted line.
//!
//! With `top` the upper edge of the stimulus, line `k` with center `c_k` is
//! predicted at `c_k + slope * (c_k - top) + offset`. The fit maximizes the
//! summed log density of every fixation under its best line, with a shared
//! Gaussian spread `sigma`.

use serde::{Deserialize, Serialize};

use super::simplex::{minimize_in_box, SimplexOptions};
use super::{check_bounds, AlgoResult, Failure, Validate};
use crate::trial::{nearest_index, Trial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressParams {
    pub slope_bounds: [f64; 2],
    pub offset_bounds: [f64; 2],
    pub sigma_bounds: [f64; 2],
}

impl Default for RegressParams {
    fn default() -> Self {
        Self {
            slope_bounds: [-0.1, 0.1],
            offset_bounds: [-50.0, 50.0],
            sigma_bounds: [1.0, 20.0],
        }
    }
}

impl Validate for RegressParams {
    fn validate(&self) -> Result<(), String> {
        check_bounds("slope_bounds", self.slope_bounds)?;
        check_bounds("offset_bounds", self.offset_bounds)?;
        check_bounds("sigma_bounds", self.sigma_bounds)?;
        if self.sigma_bounds[0] <= 0.0 {
            return Err("sigma_bounds must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressFit {
    pub slope: f64,
    pub offset: f64,
    pub sigma: f64,
    /// Negative summed log density at the optimum.
    pub cost: f64,
}

impl RegressFit {
    pub fn predicted(&self, centers: &[f64], top: f64) -> Vec<f64> {
        centers.iter().map(|c| c + self.slope * (c - top) + self.offset).collect()
    }
}

fn cost(ys: &[f64], centers: &[f64], top: f64, x: &[f64]) -> f64 {
    let (slope, offset, sigma) = (x[0], x[1], x[2]);
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let predicted: Vec<f64> = centers.iter().map(|c| c + slope * (c - top) + offset).collect();
    ys.iter()
        .map(|y| {
            let d2 = predicted.iter().map(|p| (y - p).powi(2)).fold(f64::INFINITY, f64::min);
            d2 / (2.0 * sigma * sigma) + sigma.ln() + half_log_2pi
        })
        .sum()
}

pub fn fit_regress(trial: &Trial, p: &RegressParams) -> Option<RegressFit> {
    let ys: Vec<f64> = trial.fixations.iter().map(|f| f.y).collect();
    let centers = trial.stimulus.line_centers();
    let top = trial.stimulus.min_corner().1;
    let lower = [p.slope_bounds[0], p.offset_bounds[0], p.sigma_bounds[0]];
    let upper = [p.slope_bounds[1], p.offset_bounds[1], p.sigma_bounds[1]];
    let mid: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| 0.5 * (l + u)).collect();
    let mut starts = vec![mid.clone()];
    for d in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut s = mid.clone();
            s[d] += sign * 0.25 * (upper[d] - lower[d]);
            starts.push(s);
        }
    }
    starts.push(vec![mid[0], mid[1], lower[2] + 0.1 * (upper[2] - lower[2])]);

    let opts = SimplexOptions {
        max_iter: 2000,
        ..Default::default()
    };
    let mut best: Option<RegressFit> = None;
    for s in &starts {
        let m = minimize_in_box(|x| cost(&ys, &centers, top, x), s, &lower, &upper, opts);
        if !m.value.is_finite() {
            continue;
        }
        if best.is_none_or(|b| m.value < b.cost) {
            best = Some(RegressFit {
                slope: m.x[0],
                offset: m.x[1],
                sigma: m.x[2],
                cost: m.value,
            });
        }
    }
    best
}

pub(super) fn correct(trial: &Trial, p: &RegressParams) -> AlgoResult {
    let fit = fit_regress(trial, p).ok_or_else(|| Failure::new("regress: optimizer found no finite fit"))?;
    let predicted = fit.predicted(&trial.stimulus.line_centers(), trial.stimulus.min_corner().1);
    // Predictions stay ordered as long as the slope exceeds -1, which the bounds enforce.
    Ok(trial.fixations.iter().map(|f| nearest_index(&predicted, f.y)).collect())
}

#[cfg(test)]
mod tests {
    use super::super::tests::reading_trial;
    use super::*;

    #[test]
    fn recovers_proportional_drift() {
        let (t, gold) = reading_trial(6, 50.0, "alpha beta gamma delta", |y| 0.1 * y);
        let fit = fit_regress(&t, &RegressParams::default()).unwrap();
        assert!((fit.slope - 0.1).abs() < 1e-3, "{fit:?}");
        assert!(fit.offset.abs() < 0.2, "{fit:?}");
        assert_eq!(correct(&t, &RegressParams::default()), Ok(gold));
    }

    #[test]
    fn recovers_constant_offset() {
        // More than half a line down, so attach gets most of it wrong.
        let (t, gold) = reading_trial(5, 60.0, "one two three", |_| 35.0);
        let fit = fit_regress(&t, &RegressParams::default()).unwrap();
        assert!((fit.offset - 35.0).abs() < 0.1, "{fit:?}");
        assert_eq!(correct(&t, &RegressParams::default()), Ok(gold.clone()));
        assert_ne!(super::super::attach::correct(&t), gold);
    }

    #[test]
    fn fit_is_at_least_as_good_as_a_grid() {
        let (t, _) = reading_trial(4, 50.0, "aa bb cc", |y| 0.05 * y + 4.0);
        let p = RegressParams::default();
        let fit = fit_regress(&t, &p).unwrap();
        let ys: Vec<f64> = t.fixations.iter().map(|f| f.y).collect();
        let centers = t.stimulus.line_centers();
        let mut grid_best = f64::INFINITY;
        for i in 0..=20 {
            for j in 0..=20 {
                for k in 0..=10 {
                    let x = [-0.1 + 0.01 * i as f64, -50.0 + 5.0 * j as f64, 1.0 + 1.9 * k as f64];
                    grid_best = grid_best.min(cost(&ys, &centers, 0.0, &x));
                }
            }
        }
        assert!(fit.cost <= grid_best + 1e-9);
    }
}
