//! Rank-consistent ordinal regression over line indices: the conditional
//! training loss and its gradient, decoding with clipping, and logit averaging
//! across ensemble members.
//!
//! A tensor holds `K - 1` conditional logits per position. Logit `j` (0-based)
//! models `P(y > j + 1 | y > j)` with ranks `y` counted from 1. Ranks are
//! 1-based only inside this module; decoded assignments are 0-based.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::NormScheme;

#[derive(Debug, Error)]
pub enum CornError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("max_line must be within 1..={k}, got {max_line}")]
    BadMaxLine { max_line: usize, k: usize },
    #[error("ensemble has no members")]
    EmptyEnsemble,
    #[error("invalid logit tensor: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Logits for one trial, `rows × cols` in row-major order with `cols = K - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct LogitTensor {
    pub trial_id: String,
    pub scheme: NormScheme,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    /// True at real fixations, false at padding.
    mask: Vec<bool>,
}

#[derive(Deserialize)]
struct RawTensor {
    trial_id: String,
    scheme: NormScheme,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl TryFrom<RawTensor> for LogitTensor {
    type Error = CornError;

    fn try_from(r: RawTensor) -> Result<Self, Self::Error> {
        LogitTensor::new(r.trial_id, r.scheme, r.rows, r.cols, r.values, r.mask)
    }
}

impl LogitTensor {
    pub fn new(
        trial_id: impl Into<String>,
        scheme: NormScheme,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self, CornError> {
        if rows == 0 {
            return Err(CornError::Invalid("at least one row is required".into()));
        }
        if cols == 0 {
            return Err(CornError::Invalid("at least two line classes are required".into()));
        }
        if values.len() != rows * cols {
            return Err(CornError::Invalid(format!("{} values for a {rows}x{cols} tensor", values.len())));
        }
        if mask.len() != rows {
            return Err(CornError::Invalid(format!("mask has {} entries for {rows} rows", mask.len())));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(CornError::Invalid("NaN logit".into()));
        }
        Ok(Self {
            trial_id: trial_id.into(),
            scheme,
            rows,
            cols,
            values,
            mask,
        })
    }

    /// All rows unmasked.
    pub fn from_rows(trial_id: impl Into<String>, scheme: NormScheme, rows: &[Vec<f64>]) -> Result<Self, CornError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CornError::Invalid("ragged rows".into()));
        }
        let values = rows.concat();
        Self::new(trial_id, scheme, rows.len(), cols, values, vec![true; rows.len()])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of rank classes, `cols + 1`.
    pub fn classes(&self) -> usize {
        self.cols + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, CornError> {
        Self::new(self.trial_id.clone(), self.scheme, self.rows, self.cols, values, self.mask.clone())
    }

    fn same_shape(&self, other: &LogitTensor) -> Result<(), CornError> {
        if self.rows != other.rows || self.cols != other.cols || self.mask != other.mask {
            return Err(CornError::ShapeMismatch(format!(
                "{}x{} vs {}x{} (or differing masks)",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("tensor serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, CornError> {
        let text = fs::read_to_string(path).map_err(|source| CornError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CornError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CornError> {
        fs::write(path, self.to_json()).map_err(|source| CornError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Reads every `*.json` file in `dir`, in file-name order.
pub fn read_logit_dir(dir: &Path) -> Result<Vec<LogitTensor>, CornError> {
    let io_err = |source| CornError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != "manifest.json"));
    paths.sort();
    paths.iter().map(|p| LogitTensor::read(p)).collect()
}

/// Gold ranks, 1-based, one per tensor row. Values at masked rows are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTargets {
    pub ranks: Vec<usize>,
}

impl RankTargets {
    /// From 0-based line indices.
    pub fn from_lines(lines: &[usize]) -> Self {
        Self {
            ranks: lines.iter().map(|l| l + 1).collect(),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)`, stable for large `|z|`.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_targets(z: &LogitTensor, y: &RankTargets) -> Result<(), CornError> {
    if y.ranks.len() != z.rows {
        return Err(CornError::ShapeMismatch(format!("{} targets for {} rows", y.ranks.len(), z.rows)));
    }
    let k = z.classes();
    for (i, (&r, &m)) in y.ranks.iter().zip(&z.mask).enumerate() {
        if m && !(1..=k).contains(&r) {
            return Err(CornError::ShapeMismatch(format!("rank {r} at row {i} outside 1..={k}")));
        }
    }
    Ok(())
}

/// Row `i` takes part in task `j` (0-based) when it is unmasked and, for
/// `j > 0`, its rank exceeds `j`.
fn in_subset(rank: usize, j: usize) -> bool {
    j == 0 || rank > j
}

fn subset_total(z: &LogitTensor, y: &RankTargets) -> usize {
    (0..z.cols)
        .map(|j| (0..z.rows).filter(|&i| z.mask[i] && in_subset(y.ranks[i], j)).count())
        .sum()
}

/// Mean binary cross-entropy over all conditional tasks. Zero when every row
/// is masked.
pub fn corn_loss(z: &LogitTensor, y: &RankTargets) -> Result<f64, CornError> {
    check_targets(z, y)?;
    let total = subset_total(z, y);
    if total == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for i in (0..z.rows).filter(|&i| z.mask[i]) {
        let r = y.ranks[i];
        for (j, &zij) in z.row(i).iter().enumerate() {
            if !in_subset(r, j) {
                continue;
            }
            sum += if r > j + 1 { softplus(-zij) } else { softplus(zij) };
        }
    }
    Ok(sum / total as f64)
}

/// Analytic gradient of [`corn_loss`] with respect to every logit.
pub fn corn_grad(z: &LogitTensor, y: &RankTargets) -> Result<Vec<f64>, CornError> {
    check_targets(z, y)?;
    let mut g = vec![0.0; z.values.len()];
    let total = subset_total(z, y);
    if total == 0 {
        return Ok(g);
    }
    let n = total as f64;
    for i in (0..z.rows).filter(|&i| z.mask[i]) {
        let r = y.ranks[i];
        for (j, &zij) in z.row(i).iter().enumerate() {
            if in_subset(r, j) {
                let target = if r > j + 1 { 1.0 } else { 0.0 };
                g[i * z.cols + j] = (sigmoid(zij) - target) / n;
            }
        }
    }
    Ok(g)
}

/// Predicted rank of one row before clipping.
pub fn decode_rank(row: &[f64]) -> usize {
    let mut p = 1.0;
    let mut q = 1;
    for &z in row {
        p *= sigmoid(z);
        if p > 0.5 {
            q += 1;
        }
    }
    q
}

/// 0-based line per unmasked row, clipped to `max_line - 1`.
pub fn corn_decode(z: &LogitTensor, max_line: usize) -> Result<Vec<usize>, CornError> {
    if max_line == 0 || max_line > z.classes() {
        return Err(CornError::BadMaxLine {
            max_line,
            k: z.classes(),
        });
    }
    Ok((0..z.rows)
        .filter(|&i| z.mask[i])
        .map(|i| decode_rank(z.row(i)).min(max_line) - 1)
        .collect())
}

/// Element-wise mean of the member logits.
pub fn mean_logits(tensors: &[LogitTensor]) -> Result<LogitTensor, CornError> {
    let first = tensors.first().ok_or(CornError::EmptyEnsemble)?;
    let mut sum = vec![0.0; first.values.len()];
    for t in tensors {
        first.same_shape(t)?;
        if t.trial_id != first.trial_id {
            return Err(CornError::ShapeMismatch(format!(
                "ensemble mixes trials {} and {}",
                first.trial_id, t.trial_id
            )));
        }
        for (s, v) in sum.iter_mut().zip(&t.values) {
            *s += v;
        }
    }
    let n = tensors.len() as f64;
    first.with_values(sum.into_iter().map(|s| s / n).collect())
}

/// Averages the members' logits, then decodes.
pub fn ensemble_decode(tensors: &[LogitTensor], max_line: usize) -> Result<Vec<usize>, CornError> {
    corn_decode(&mean_logits(tensors)?, max_line)
}
