//! The eleven classical vertical-drift correction algorithms behind one
//! dispatch interface.
//!
//! Every algorithm maps a trial to one line index per fixation. Parameter
//! errors are reported to the caller; any failure inside an algorithm (empty
//! clusters, optimizer breakdown, degenerate input) degrades to `attach` and is
//! recorded in [`Assignment::fallback`].

mod attach;
mod chain;
mod cluster;
mod compare;
pub mod dtw;
pub mod kmeans;
mod merge;
mod regress;
mod segment;
pub mod simplex;
mod slice;
mod split;
mod stretch;
mod warp;

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trial::{Assignment, Source, Trial};

pub use cluster::ClusterParams;
pub use chain::ChainParams;
pub use compare::CompareParams;
pub use merge::MergeParams;
pub use regress::{fit_regress, RegressFit, RegressParams};
pub use slice::SliceParams;
pub use split::SplitParams;
pub use stretch::{fit_stretch, StretchFit, StretchParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Attach,
    Chain,
    Cluster,
    Compare,
    Merge,
    Regress,
    Segment,
    Slice,
    Split,
    Stretch,
    Warp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Attach,
        Algorithm::Chain,
        Algorithm::Cluster,
        Algorithm::Compare,
        Algorithm::Merge,
        Algorithm::Regress,
        Algorithm::Segment,
        Algorithm::Slice,
        Algorithm::Split,
        Algorithm::Stretch,
        Algorithm::Warp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Attach => "attach",
            Algorithm::Chain => "chain",
            Algorithm::Cluster => "cluster",
            Algorithm::Compare => "compare",
            Algorithm::Merge => "merge",
            Algorithm::Regress => "regress",
            Algorithm::Segment => "segment",
            Algorithm::Slice => "slice",
            Algorithm::Split => "split",
            Algorithm::Stretch => "stretch",
            Algorithm::Warp => "warp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = CorrectorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CorrectorError::Param(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrectorError {
    #[error("parameter error: {0}")]
    Param(String),
    #[error("invalid input: {0}")]
    Input(String),
}

/// An algorithm plus its parameters, as written in run configs:
/// `{"algo": "cluster", "params": {}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorSpec {
    pub algo: Algorithm,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl CorrectorSpec {
    pub fn new(algo: Algorithm) -> Self {
        Self {
            algo,
            params: serde_json::Map::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    fn parse<P: DeserializeOwned + Validate>(&self) -> Result<P, CorrectorError> {
        let p: P = serde_json::from_value(serde_json::Value::Object(self.params.clone()))
            .map_err(|e| CorrectorError::Param(format!("{}: {e}", self.algo)))?;
        p.validate().map_err(|e| CorrectorError::Param(format!("{}: {e}", self.algo)))?;
        Ok(p)
    }

    /// Checks the parameters without running anything.
    pub fn validate(&self) -> Result<(), CorrectorError> {
        self.compile().map(|_| ())
    }

    fn compile(&self) -> Result<Compiled, CorrectorError> {
        Ok(match self.algo {
            Algorithm::Attach => {
                self.parse::<NoParams>()?;
                Compiled::Attach
            }
            Algorithm::Chain => Compiled::Chain(self.parse()?),
            Algorithm::Cluster => Compiled::Cluster(self.parse()?),
            Algorithm::Compare => Compiled::Compare(self.parse()?),
            Algorithm::Merge => Compiled::Merge(self.parse()?),
            Algorithm::Regress => Compiled::Regress(self.parse()?),
            Algorithm::Segment => {
                self.parse::<NoParams>()?;
                Compiled::Segment
            }
            Algorithm::Slice => Compiled::Slice(self.parse()?),
            Algorithm::Split => Compiled::Split(self.parse()?),
            Algorithm::Stretch => Compiled::Stretch(self.parse()?),
            Algorithm::Warp => {
                self.parse::<NoParams>()?;
                Compiled::Warp
            }
        })
    }
}

pub(crate) trait Validate {
    fn validate(&self) -> Result<(), String>;
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

impl Validate for NoParams {
    fn validate(&self) -> Result<(), String> {
        Ok(())
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

pub(crate) fn check_bounds(name: &str, b: [f64; 2]) -> Result<(), String> {
    if b[0].is_finite() && b[1].is_finite() && b[0] <= b[1] {
        Ok(())
    } else {
        Err(format!("{name} must be an ordered finite pair, got {b:?}"))
    }
}

enum Compiled {
    Attach,
    Chain(ChainParams),
    Cluster(ClusterParams),
    Compare(CompareParams),
    Merge(MergeParams),
    Regress(RegressParams),
    Segment,
    Slice(SliceParams),
    Split(SplitParams),
    Stretch(StretchParams),
    Warp,
}

/// Internal algorithm failure; triggers the attach fallback.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Failure(pub String);

impl Failure {
    pub fn new(msg: impl Into<String>) -> Self {
        Failure(msg.into())
    }
}

pub(crate) type AlgoResult = Result<Vec<usize>, Failure>;

/// Runs `spec` on `trial`. Deterministic for fixed inputs.
pub fn apply_corrector(trial: &Trial, spec: &CorrectorSpec) -> Result<Assignment, CorrectorError> {
    let compiled = spec.compile()?;
    if trial.fixations.is_empty() {
        return Err(CorrectorError::Input(format!("trial {} has no fixations", trial.id)));
    }
    if let Some(i) = trial.fixations.iter().position(|f| !f.x.is_finite() || !f.y.is_finite()) {
        return Err(CorrectorError::Input(format!("trial {} fixation {i} is not finite", trial.id)));
    }
    let source = Source::Algorithm(spec.algo);
    if trial.line_count() == 1 {
        return Ok(Assignment::new(trial.id.clone(), vec![0; trial.fixations.len()], source));
    }
    let result = match &compiled {
        Compiled::Attach => Ok(attach::correct(trial)),
        Compiled::Chain(p) => Ok(chain::correct(trial, p)),
        Compiled::Cluster(p) => cluster::correct(trial, p),
        Compiled::Compare(p) => compare::correct(trial, p),
        Compiled::Merge(p) => merge::correct(trial, p),
        Compiled::Regress(p) => regress::correct(trial, p),
        Compiled::Segment => Ok(segment::correct(trial)),
        Compiled::Slice(p) => slice::correct(trial, p),
        Compiled::Split(p) => split::correct(trial, p),
        Compiled::Stretch(p) => stretch::correct(trial, p),
        Compiled::Warp => warp::correct(trial),
    };
    let m = trial.line_count();
    let mut assignment = Assignment::new(trial.id.clone(), Vec::new(), source);
    match result {
        Ok(lines) if lines.len() == trial.fixations.len() && lines.iter().all(|&l| l < m) => {
            assignment.lines = lines;
        }
        Ok(_) => {
            assignment.lines = attach::correct(trial);
            assignment.fallback = Some("algorithm produced an out-of-range assignment".into());
        }
        Err(Failure(reason)) => {
            assignment.lines = attach::correct(trial);
            assignment.fallback = Some(reason);
        }
    }
    Ok(assignment)
}

/// Runs every algorithm with default parameters.
pub fn apply_all(trial: &Trial) -> Vec<Assignment> {
    Algorithm::ALL
        .iter()
        .map(|&a| apply_corrector(trial, &CorrectorSpec::new(a)).expect("default parameters are valid"))
        .collect()
}

/// Splits `0..n` into consecutive runs, starting a new run at every index in
/// `starts` (which must be sorted and lie in `1..n`).
pub(crate) fn runs_from_starts(n: usize, starts: &[usize]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::with_capacity(starts.len() + 1);
    let mut begin = 0;
    for &s in starts {
        if s > begin && s < n {
            out.push(begin..s);
            begin = s;
        }
    }
    out.push(begin..n);
    out
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Maps groups with the given mean y (any order) onto distinct lines so that
/// vertical order is preserved and the total weighted distance to line centers
/// is minimal. With as many groups as lines this is the positional mapping.
/// Requires `means.len() <= centers.len()`.
pub(crate) fn ordered_lines(means: &[f64], weights: &[f64], centers: &[f64]) -> Vec<usize> {
    let k = means.len();
    let m = centers.len();
    assert!(k <= m && weights.len() == k);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    if k == 0 {
        return Vec::new();
    }
    // best[g][l]: minimal cost placing sorted groups 0..=g with group g on line l.
    let mut best = vec![vec![f64::INFINITY; m]; k];
    let mut from = vec![vec![0usize; m]; k];
    for l in 0..m {
        let g = order[0];
        best[0][l] = weights[g] * (means[g] - centers[l]).abs();
    }
    for gi in 1..k {
        let g = order[gi];
        let mut prefix_best = f64::INFINITY;
        let mut prefix_arg = 0;
        for l in 0..m {
            if l > 0 && best[gi - 1][l - 1] < prefix_best {
                prefix_best = best[gi - 1][l - 1];
                prefix_arg = l - 1;
            }
            best[gi][l] = prefix_best + weights[g] * (means[g] - centers[l]).abs();
            from[gi][l] = prefix_arg;
        }
    }
    let mut line = (0..m).fold(0, |b, l| if best[k - 1][l] < best[k - 1][b] { l } else { b });
    let mut out = vec![0; k];
    for gi in (0..k).rev() {
        out[order[gi]] = line;
        if gi > 0 {
            line = from[gi][line];
        }
    }
    out
}
