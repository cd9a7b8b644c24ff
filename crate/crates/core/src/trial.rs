//! Core domain types: fixations, character boxes, stimulus geometry, trials and
//! line assignments.
//!
//! Line indices are 0-based everywhere. A [`Stimulus`] can only be built through
//! [`Stimulus::new`], which checks the geometric invariants once so that every
//! other module can rely on them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One fixation as reported by the eye tracker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub x: f64,
    pub y: f64,
    /// Milliseconds since trial start.
    pub start: u64,
    /// Milliseconds, strictly positive.
    pub duration: u64,
    pub gold_line: Option<usize>,
    pub discarded: bool,
}

impl Fixation {
    pub fn new(x: f64, y: f64, start: u64, duration: u64) -> Self {
        Self {
            x,
            y,
            start,
            duration,
            gold_line: None,
            discarded: false,
        }
    }

    pub fn with_gold(mut self, line: usize) -> Self {
        self.gold_line = Some(line);
        self
    }
}

/// Axis-aligned bounding box of one character of the stimulus text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharBox {
    pub ch: char,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub line: usize,
}

/// Derived geometry of one text line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGeometry {
    pub y_min: f64,
    pub y_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl LineGeometry {
    pub fn center(&self) -> f64 {
        (self.y_min + self.y_max) / 2.0
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn contains_y(&self, y: f64) -> bool {
        y >= self.y_min && y <= self.y_max
    }
}

/// A word of the stimulus: a maximal run of non-whitespace boxes on one line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Word {
    pub line: usize,
    pub x0: f64,
    pub x1: f64,
    pub y: f64,
}

impl Word {
    pub fn center_x(&self) -> f64 {
        (self.x0 + self.x1) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StimulusError {
    #[error("stimulus has no character boxes")]
    Empty,
    #[error("box {index} ({ch:?}) is degenerate or non-finite")]
    DegenerateBox { index: usize, ch: char },
    #[error("box {index} references line {line} but line_count is {line_count}")]
    LineOutOfRange {
        index: usize,
        line: usize,
        line_count: usize,
    },
    #[error("line {0} has no character boxes")]
    EmptyLine(usize),
    #[error("lines {0} and {1} overlap or are out of vertical order")]
    LineOrder(usize, usize),
}

/// Character boxes grouped into lines, plus the per-line geometry derived from
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    boxes: Vec<CharBox>,
    lines: Vec<LineGeometry>,
}

impl Stimulus {
    /// Builds a stimulus with `line_count` lines. Every line in `0..line_count`
    /// must own at least one box, line y-ranges must be ordered top to bottom
    /// and may touch but not overlap.
    pub fn new(boxes: Vec<CharBox>, line_count: usize) -> Result<Self, StimulusError> {
        if boxes.is_empty() || line_count == 0 {
            return Err(StimulusError::Empty);
        }
        let mut acc: Vec<Option<LineGeometry>> = vec![None; line_count];
        for (index, b) in boxes.iter().enumerate() {
            let finite = [b.x0, b.y0, b.x1, b.y1].iter().all(|v| v.is_finite());
            if !finite || b.x0 >= b.x1 || b.y0 >= b.y1 {
                return Err(StimulusError::DegenerateBox { index, ch: b.ch });
            }
            if b.line >= line_count {
                return Err(StimulusError::LineOutOfRange {
                    index,
                    line: b.line,
                    line_count,
                });
            }
            let g = acc[b.line].get_or_insert(LineGeometry {
                y_min: b.y0,
                y_max: b.y1,
                x_min: b.x0,
                x_max: b.x1,
            });
            g.y_min = g.y_min.min(b.y0);
            g.y_max = g.y_max.max(b.y1);
            g.x_min = g.x_min.min(b.x0);
            g.x_max = g.x_max.max(b.x1);
        }
        let lines = acc
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.ok_or(StimulusError::EmptyLine(i)))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, pair) in lines.windows(2).enumerate() {
            if pair[0].y_max > pair[1].y_min {
                return Err(StimulusError::LineOrder(i, i + 1));
            }
        }
        Ok(Self { boxes, lines })
    }

    pub fn boxes(&self) -> &[CharBox] {
        &self.boxes
    }

    pub fn lines(&self) -> &[LineGeometry] {
        &self.lines
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    /// Midpoint of each line's vertical range, strictly increasing.
    pub fn line_centers(&self) -> Vec<f64> {
        self.lines.iter().map(LineGeometry::center).collect()
    }

    /// Index of the line whose closed y-range contains `y`. Gaps between lines
    /// and points outside the text return `None`; a point on a shared boundary
    /// belongs to the upper (lower-index) line.
    pub fn line_overlap(&self, y: f64) -> Option<usize> {
        // Ranges are sorted and disjoint apart from shared endpoints, so the
        // first containing range is the lowest index.
        let idx = self.lines.partition_point(|g| g.y_max < y);
        self.lines
            .get(idx)
            .filter(|g| g.contains_y(y))
            .map(|_| idx)
    }

    /// [`Self::line_overlap`] encoded as a model feature, `-1` for no overlap.
    pub fn overlap_feature(&self, y: f64) -> i64 {
        self.line_overlap(y).map_or(-1, |i| i as i64)
    }

    /// Line whose center is nearest to `y`; ties go to the lower index.
    pub fn nearest_line(&self, y: f64) -> usize {
        nearest_index(&self.line_centers(), y)
    }

    /// Smallest corner over all boxes: `(min x0, min y0)`.
    pub fn min_corner(&self) -> (f64, f64) {
        self.boxes.iter().fold((f64::INFINITY, f64::INFINITY), |(x, y), b| {
            (x.min(b.x0), y.min(b.y0))
        })
    }

    /// `(min x0, min y0, max x1, max y1)` over all boxes.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        self.boxes.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), bx| (a.min(bx.x0), b.min(bx.y0), c.max(bx.x1), d.max(bx.y1)),
        )
    }

    pub fn min_line_height(&self) -> f64 {
        self.lines
            .iter()
            .map(LineGeometry::height)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_line_width(&self) -> f64 {
        self.lines
            .iter()
            .map(LineGeometry::width)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Words in reading order: boxes are taken in list order, split on
    /// whitespace and on line changes.
    pub fn words(&self) -> Vec<Word> {
        let mut words = Vec::new();
        let mut current: Option<Word> = None;
        for b in &self.boxes {
            if b.ch.is_whitespace() {
                words.extend(current.take());
                continue;
            }
            match current.as_mut() {
                Some(w) if w.line == b.line => {
                    w.x0 = w.x0.min(b.x0);
                    w.x1 = w.x1.max(b.x1);
                }
                _ => {
                    words.extend(current.take());
                    current = Some(Word {
                        line: b.line,
                        x0: b.x0,
                        x1: b.x1,
                        y: self.lines[b.line].center(),
                    });
                }
            }
        }
        words.extend(current);
        words
    }
}

/// Index of the value in `centers` nearest to `y`, lowest index on ties.
pub fn nearest_index(centers: &[f64], y: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = (y - c).abs();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// One participant reading one screen.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub id: String,
    pub dataset: String,
    pub fixations: Vec<Fixation>,
    pub stimulus: Stimulus,
    pub metadata: BTreeMap<String, String>,
}

impl Trial {
    pub fn line_count(&self) -> usize {
        self.stimulus.line_count()
    }

    /// A trial is labeled when any fixation carries a gold line.
    pub fn is_labeled(&self) -> bool {
        self.fixations.iter().any(|f| f.gold_line.is_some())
    }

    pub fn gold_lines(&self) -> Option<Vec<usize>> {
        self.fixations.iter().map(|f| f.gold_line).collect()
    }

    /// Returns every invariant violation; an empty list means the trial is
    /// valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.id.is_empty() {
            out.push(Violation::new(ViolationCode::EmptyId, None, "trial id is empty"));
        }
        if self.fixations.is_empty() {
            out.push(Violation::new(
                ViolationCode::EmptyTrial,
                None,
                "trial has no fixations",
            ));
        }
        let m = self.line_count();
        let labeled = self.is_labeled();
        for (i, f) in self.fixations.iter().enumerate() {
            if !f.x.is_finite() || !f.y.is_finite() {
                out.push(Violation::new(
                    ViolationCode::NonFiniteCoordinate,
                    Some(i),
                    "fixation coordinate is not finite",
                ));
            }
            if f.duration == 0 {
                out.push(Violation::new(
                    ViolationCode::NonPositiveDuration,
                    Some(i),
                    "fixation duration must be positive",
                ));
            }
            match f.gold_line {
                Some(line) if line >= m => out.push(Violation::new(
                    ViolationCode::LabelOutOfRange,
                    Some(i),
                    format!("gold line {line} but stimulus has {m} lines"),
                )),
                None if labeled && !f.discarded => out.push(Violation::new(
                    ViolationCode::MissingLabel,
                    Some(i),
                    "non-discarded fixation in a labeled trial has no gold line",
                )),
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    EmptyId,
    EmptyTrial,
    NonFiniteCoordinate,
    NonPositiveDuration,
    LabelOutOfRange,
    MissingLabel,
    InvalidStimulus,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::EmptyId => "empty_id",
            ViolationCode::EmptyTrial => "empty_trial",
            ViolationCode::NonFiniteCoordinate => "non_finite_coordinate",
            ViolationCode::NonPositiveDuration => "non_positive_duration",
            ViolationCode::LabelOutOfRange => "label_out_of_range",
            ViolationCode::MissingLabel => "missing_label",
            ViolationCode::InvalidStimulus => "invalid_stimulus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub fixation: Option<usize>,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, fixation: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            code,
            fixation,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fixation {
            Some(i) => write!(f, "{} (fixation {i}): {}", self.code.as_str(), self.message),
            None => write!(f, "{}: {}", self.code.as_str(), self.message),
        }
    }
}

/// Where an [`Assignment`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Algorithm(crate::correctors::Algorithm),
    Woc,
    Edist,
    Human,
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::Algorithm(a) => a.name(),
            Source::Woc => "woc",
            Source::Edist => "edist",
            Source::Human => "human",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "woc" => Some(Source::Woc),
            "edist" => Some(Source::Edist),
            "human" => Some(Source::Human),
            other => other.parse().ok().map(Source::Algorithm),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl serde::Serialize for Source {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for Source {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Source::parse(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown source {name:?}")))
    }
}

/// Per-fixation line indices for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub trial_id: String,
    pub lines: Vec<usize>,
    pub source: Source,
    /// Set when the producing algorithm failed and degraded to `attach`.
    pub fallback: Option<String>,
}

impl Assignment {
    pub fn new(trial_id: impl Into<String>, lines: Vec<usize>, source: Source) -> Self {
        Self {
            trial_id: trial_id.into(),
            lines,
            source,
            fallback: None,
        }
    }

    /// Checks length and range against `trial`.
    pub fn check(&self, trial: &Trial) -> Result<(), String> {
        if self.lines.len() != trial.fixations.len() {
            return Err(format!(
                "assignment for {} has {} lines but trial has {} fixations",
                self.trial_id,
                self.lines.len(),
                trial.fixations.len()
            ));
        }
        let m = trial.line_count();
        if let Some((i, l)) = self.lines.iter().enumerate().find(|(_, &l)| l >= m) {
            return Err(format!("fixation {i} assigned line {l} but trial has {m} lines"));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn row_boxes(line: usize, y0: f64, y1: f64, text: &str, x_start: f64, cw: f64) -> Vec<CharBox> {
        text.chars()
            .enumerate()
            .map(|(j, ch)| CharBox {
                ch,
                x0: x_start + j as f64 * cw,
                y0,
                x1: x_start + (j + 1) as f64 * cw,
                y1,
                line,
            })
            .collect()
    }

    fn two_lines() -> Stimulus {
        let mut boxes = row_boxes(0, 0.0, 50.0, "ab cd", 0.0, 10.0);
        boxes.extend(row_boxes(1, 60.0, 110.0, "efg h", 0.0, 10.0));
        Stimulus::new(boxes, 2).unwrap()
    }

    fn trial(fixations: Vec<Fixation>) -> Trial {
        Trial {
            id: "t".into(),
            dataset: "d".into(),
            fixations,
            stimulus: two_lines(),
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn centers_of_two_and_one_lines() {
        assert_eq!(two_lines().line_centers(), vec![25.0, 85.0]);
        let one = Stimulus::new(row_boxes(0, 100.0, 120.0, "x", 0.0, 5.0), 1).unwrap();
        assert_eq!(one.line_centers(), vec![110.0]);
    }

    #[test]
    fn fourteen_uniform_lines() {
        let boxes = (0..14)
            .flat_map(|i| row_boxes(i, 64.0 * i as f64, 64.0 * (i + 1) as f64, "ab", 0.0, 10.0))
            .collect();
        let s = Stimulus::new(boxes, 14).unwrap();
        let expected: Vec<f64> = (0..14).map(|i| 32.0 + 64.0 * i as f64).collect();
        assert_eq!(s.line_centers(), expected);
        assert_eq!(*s.line_centers().last().unwrap(), 864.0);
    }

    #[test]
    fn overlap_inside_gap_and_outside() {
        let s = two_lines();
        assert_eq!(s.line_overlap(25.0), Some(0));
        assert_eq!(s.overlap_feature(55.0), -1);
        assert_eq!(s.overlap_feature(-3.0), -1);
        assert_eq!(s.overlap_feature(110.0), 1);
        assert_eq!(s.overlap_feature(110.5), -1);
    }

    #[test]
    fn shared_boundary_goes_to_lower_index() {
        let mut boxes = row_boxes(0, 0.0, 50.0, "a", 0.0, 10.0);
        boxes.extend(row_boxes(1, 50.0, 100.0, "b", 0.0, 10.0));
        let s = Stimulus::new(boxes, 2).unwrap();
        assert_eq!(s.line_overlap(50.0), Some(0));
        assert_eq!(s.line_overlap(50.000001), Some(1));
    }

    #[test]
    fn stimulus_rejects_bad_geometry() {
        let boxes = row_boxes(0, 0.0, 50.0, "a", 0.0, 10.0);
        assert_eq!(
            Stimulus::new(boxes.clone(), 2),
            Err(StimulusError::EmptyLine(1))
        );
        let mut bad = row_boxes(0, 0.0, 50.0, "a", 0.0, 10.0);
        bad.extend(row_boxes(3, 60.0, 100.0, "a", 0.0, 10.0));
        assert!(matches!(
            Stimulus::new(bad, 2),
            Err(StimulusError::LineOutOfRange { line: 3, .. })
        ));
        let mut overlap = row_boxes(0, 0.0, 50.0, "a", 0.0, 10.0);
        overlap.extend(row_boxes(1, 40.0, 100.0, "a", 0.0, 10.0));
        assert_eq!(Stimulus::new(overlap, 2), Err(StimulusError::LineOrder(0, 1)));
        let mut flat = row_boxes(0, 0.0, 50.0, "a", 0.0, 10.0);
        flat[0].x1 = flat[0].x0;
        assert!(matches!(
            Stimulus::new(flat, 1),
            Err(StimulusError::DegenerateBox { .. })
        ));
    }

    #[test]
    fn words_split_on_spaces_and_lines() {
        let words = two_lines().words();
        assert_eq!(words.len(), 4);
        assert_eq!((words[0].x0, words[0].x1, words[0].line), (0.0, 20.0, 0));
        assert_eq!((words[1].x0, words[1].x1), (30.0, 50.0));
        assert_eq!((words[2].line, words[2].y), (1, 85.0));
    }

    #[test]
    fn validate_reports_codes() {
        let ok = trial(vec![Fixation::new(5.0, 25.0, 0, 200).with_gold(0)]);
        assert!(ok.validate().is_empty());

        let bad = trial(vec![Fixation::new(5.0, 25.0, 0, 200).with_gold(2)]);
        let v = bad.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code.as_str(), "label_out_of_range");

        let empty = trial(vec![]);
        assert_eq!(empty.validate()[0].code, ViolationCode::EmptyTrial);

        let mut discarded = Fixation::new(5.0, 25.0, 0, 200);
        discarded.discarded = true;
        let mixed = trial(vec![
            Fixation::new(5.0, 25.0, 0, 200).with_gold(0),
            discarded,
            Fixation::new(5.0, 25.0, 300, 0),
        ]);
        let codes: Vec<_> = mixed.validate().iter().map(|v| v.code).collect();
        assert_eq!(
            codes,
            vec![ViolationCode::NonPositiveDuration, ViolationCode::MissingLabel]
        );
    }
}
