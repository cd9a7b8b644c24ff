//! Per-trial coordinate normalization and training-set standardization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trial::Trial;

/// The two normalization schemes fed to the model ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NormScheme {
    /// Subtract the minimum box corner.
    #[serde(rename = "xy")]
    XyOnly,
    /// `XyOnly`, then divide x by the widest line and y by the shortest line height.
    #[serde(rename = "xy_lw")]
    XyAndLw,
}

impl NormScheme {
    pub const ALL: [NormScheme; 2] = [NormScheme::XyOnly, NormScheme::XyAndLw];

    pub fn tag(&self) -> &'static str {
        match self {
            NormScheme::XyOnly => "xy",
            NormScheme::XyAndLw => "xy_lw",
        }
    }
}

impl fmt::Display for NormScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for NormScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xy" => Ok(NormScheme::XyOnly),
            "xy_lw" => Ok(NormScheme::XyAndLw),
            other => Err(format!("unknown normalization scheme {other:?} (expected xy or xy_lw)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("degenerate stimulus: min line height {min_height}, max line width {max_width}")]
    DegenerateStimulus { min_height: f64, max_width: f64 },
    #[error("feature {0} has zero variance")]
    ZeroVarianceFeature(usize),
    #[error("need at least two feature vectors to fit statistics, got {0}")]
    TooFewSamples(usize),
    #[error("feature vectors have inconsistent length: expected {expected}, found {found}")]
    Ragged { expected: usize, found: usize },
    #[error("statistics were fitted for scheme {fitted}, requested {requested}")]
    SchemeMismatch { fitted: NormScheme, requested: NormScheme },
}

/// Fixation coordinates minus the minimum character box corner.
pub fn xy_norm(trial: &Trial) -> Vec<[f64; 2]> {
    let (mx, my) = trial.stimulus.min_corner();
    trial.fixations.iter().map(|f| [f.x - mx, f.y - my]).collect()
}

/// Divides xy-normalized coordinates by the widest line (x) and the shortest
/// line height (y) of the trial's stimulus.
pub fn lw_norm(xy: &[[f64; 2]], trial: &Trial) -> Result<Vec<[f64; 2]>, NormError> {
    let min_height = trial.stimulus.min_line_height();
    let max_width = trial.stimulus.max_line_width();
    if !(min_height > 0.0 && max_width > 0.0) {
        return Err(NormError::DegenerateStimulus { min_height, max_width });
    }
    Ok(xy.iter().map(|[x, y]| [x / max_width, y / min_height]).collect())
}

/// Applies `scheme` to the trial's fixations.
pub fn apply_scheme(trial: &Trial, scheme: NormScheme) -> Result<Vec<[f64; 2]>, NormError> {
    let xy = xy_norm(trial);
    match scheme {
        NormScheme::XyOnly => Ok(xy),
        NormScheme::XyAndLw => lw_norm(&xy, trial),
    }
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub scheme: NormScheme,
}

impl NormStats {
    pub fn fit<V: AsRef<[f64]>>(features: &[V], scheme: NormScheme) -> Result<Self, NormError> {
        if features.len() < 2 {
            return Err(NormError::TooFewSamples(features.len()));
        }
        let dim = features[0].as_ref().len();
        for v in features {
            if v.as_ref().len() != dim {
                return Err(NormError::Ragged {
                    expected: dim,
                    found: v.as_ref().len(),
                });
            }
        }
        let n = features.len() as f64;
        let mut means = vec![0.0; dim];
        for v in features {
            for (m, x) in means.iter_mut().zip(v.as_ref()) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; dim];
        for v in features {
            for ((s, x), m) in vars.iter_mut().zip(v.as_ref()).zip(&means) {
                *s += (x - m) * (x - m);
            }
        }
        let stds: Vec<f64> = vars.iter().map(|s| (s / n).sqrt()).collect();
        if let Some(i) = stds.iter().position(|&s| s.is_nan() || s <= 0.0) {
            return Err(NormError::ZeroVarianceFeature(i));
        }
        Ok(Self { means, stds, scheme })
    }

    /// Fits x/y statistics over the scheme-normalized fixations of `trials`.
    pub fn fit_trials(trials: &[Trial], scheme: NormScheme) -> Result<Self, NormError> {
        let mut rows = Vec::new();
        for t in trials {
            rows.extend(apply_scheme(t, scheme)?);
        }
        Self::fit(&rows, scheme)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(z, (m, s))| z * s + m)
            .collect()
    }

    pub fn check_scheme(&self, scheme: NormScheme) -> Result<(), NormError> {
        if self.scheme == scheme {
            Ok(())
        } else {
            Err(NormError::SchemeMismatch {
                fitted: self.scheme,
                requested: scheme,
            })
        }
    }
}
