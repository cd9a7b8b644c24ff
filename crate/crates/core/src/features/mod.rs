//! Model inputs exported for external training: per-fixation coordinate and
//! line-overlap features, and a three-channel raster of the trial.

mod raster;

pub use raster::{render_second_stream, RasterTransform, SecondStreamRaster, MARKER_SIZE, RASTER_SIZE};

use serde::Serialize;
use thiserror::Error;

use crate::normalize::{apply_scheme, NormError, NormScheme, NormStats};
use crate::trial::Trial;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("cannot pad {rows} rows to length {pad_to}")]
    PadTooShort { rows: usize, pad_to: usize },
    #[error("raster encoding failed: {0}")]
    Encode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstStreamRow {
    pub x: f64,
    pub y: f64,
    /// Line whose box band contains the raw y, or -1.
    pub line_overlap: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstStreamMatrix {
    pub trial_id: String,
    pub scheme: NormScheme,
    pub rows: Vec<FirstStreamRow>,
    /// False at padding rows.
    pub mask: Vec<bool>,
}

pub const FIRST_STREAM_HEADER: &str = "x,y,line_overlap,mask";

impl FirstStreamMatrix {
    pub fn fixation_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(FIRST_STREAM_HEADER);
        out.push('\n');
        for (r, m) in self.rows.iter().zip(&self.mask) {
            out.push_str(&format!("{:?},{:?},{},{}\n", r.x, r.y, r.line_overlap, u8::from(*m)));
        }
        out
    }
}

/// Normalizes the trial's fixations under `scheme`, standardizes them with
/// `stats` and pairs them with the line overlap of the raw y. Padding rows
/// (zeros, overlap -1, mask false) extend the matrix to `pad_to` rows.
pub fn first_stream(
    trial: &Trial,
    scheme: NormScheme,
    stats: &NormStats,
    pad_to: Option<usize>,
) -> Result<FirstStreamMatrix, FeatureError> {
    stats.check_scheme(scheme)?;
    let coords = apply_scheme(trial, scheme)?;
    let n = coords.len();
    let len = pad_to.unwrap_or(n);
    if len < n {
        return Err(FeatureError::PadTooShort { rows: n, pad_to: len });
    }
    let mut rows: Vec<FirstStreamRow> = coords
        .iter()
        .zip(&trial.fixations)
        .map(|(c, f)| {
            let z = stats.apply(c);
            FirstStreamRow {
                x: z[0],
                y: z[1],
                line_overlap: trial.stimulus.overlap_feature(f.y),
            }
        })
        .collect();
    rows.resize(
        len,
        FirstStreamRow {
            x: 0.0,
            y: 0.0,
            line_overlap: -1,
        },
    );
    let mut mask = vec![true; n];
    mask.resize(len, false);
    Ok(FirstStreamMatrix {
        trial_id: trial.id.clone(),
        scheme,
        rows,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correctors::tests::{stimulus, trial_from};
    use crate::normalize::{lw_norm, xy_norm};
    use crate::trial::tests::row_boxes;
    use crate::trial::Stimulus;

    fn gapped_trial(pts: &[(f64, f64)]) -> Trial {
        // Lines at [0,40) and [60,100): a 20 px gap between them.
        let mut boxes = row_boxes(0, 0.0, 40.0, "abc def", 0.0, 14.0);
        boxes.extend(row_boxes(1, 60.0, 100.0, "ghi jkl", 0.0, 14.0));
        trial_from(Stimulus::new(boxes, 2).unwrap(), pts)
    }

    #[test]
    fn overlap_feature_with_gap_sentinel() {
        let t = gapped_trial(&[(10.0, 80.0), (20.0, 50.0), (30.0, 20.0), (30.0, -5.0)]);
        let stats = NormStats::fit_trials(std::slice::from_ref(&t), NormScheme::XyOnly).unwrap();
        let m = first_stream(&t, NormScheme::XyOnly, &stats, None).unwrap();
        let overlaps: Vec<i64> = m.rows.iter().map(|r| r.line_overlap).collect();
        assert_eq!(overlaps, vec![1, -1, 0, -1]);
    }

    #[test]
    fn overlap_matches_a_box_scan() {
        let t = gapped_trial(&[(0.0, 0.0), (10.0, 39.9), (10.0, 40.0), (10.0, 60.0), (10.0, 100.0), (10.0, 101.0)]);
        let stats = NormStats::fit_trials(std::slice::from_ref(&t), NormScheme::XyOnly).unwrap();
        let m = first_stream(&t, NormScheme::XyOnly, &stats, None).unwrap();
        for (row, f) in m.rows.iter().zip(&t.fixations) {
            let scan = t
                .stimulus
                .boxes()
                .iter()
                .filter(|b| b.y0 <= f.y && f.y <= b.y1)
                .map(|b| b.line as i64)
                .min()
                .unwrap_or(-1);
            assert_eq!(row.line_overlap, scan, "y={}", f.y);
        }
    }

    #[test]
    fn standardization_inverts_to_lw_norm() {
        let t = trial_from(stimulus(3, 50.0, "lorem ipsum"), &[(10.0, 25.0), (60.0, 75.0), (120.0, 125.0), (30.0, 30.0)]);
        let stats = NormStats::fit_trials(std::slice::from_ref(&t), NormScheme::XyAndLw).unwrap();
        let m = first_stream(&t, NormScheme::XyAndLw, &stats, None).unwrap();
        let expected = lw_norm(&xy_norm(&t), &t).unwrap();
        for (row, e) in m.rows.iter().zip(&expected) {
            let back = stats.invert(&[row.x, row.y]);
            assert!((back[0] - e[0]).abs() < 1e-12 && (back[1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn padding_and_errors() {
        let t = trial_from(stimulus(2, 50.0, "ab"), &[(1.0, 10.0), (5.0, 70.0)]);
        let stats = NormStats::fit_trials(std::slice::from_ref(&t), NormScheme::XyOnly).unwrap();
        let m = first_stream(&t, NormScheme::XyOnly, &stats, Some(5)).unwrap();
        assert_eq!(m.rows.len(), 5);
        assert_eq!(m.mask, vec![true, true, false, false, false]);
        assert_eq!(m.fixation_count(), 2);
        assert_eq!(m.rows[4].line_overlap, -1);
        assert!(m.to_csv().starts_with("x,y,line_overlap,mask\n"));
        assert_eq!(m.to_csv().lines().count(), 6);
        assert!(matches!(first_stream(&t, NormScheme::XyOnly, &stats, Some(1)), Err(FeatureError::PadTooShort { .. })));
        assert!(matches!(first_stream(&t, NormScheme::XyAndLw, &stats, None), Err(FeatureError::Norm(_))));
    }
}
