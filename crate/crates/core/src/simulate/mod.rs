//! Synthetic passage-reading trials with controllable vertical distortion.
//!
//! Every recorded y follows `y = N(l_y, noise) + l_y * shift`, where `l_y` is
//! the center of the line the simulated reader is looking at. That line is also
//! the fixation's gold label.

mod corpus;

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Triangular};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{clean_text, Corpus};

use crate::batch::{self, Execution};
use crate::io::{self, DatasetManifest, IoError};
use crate::trial::{CharBox, Fixation, Stimulus, Trial};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("corpus too short: passage needs {needed} words, corpus has {available}")]
    CorpusTooShort { needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Distortion applied to one simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionConfig {
    /// Standard deviation of the y noise, pixels.
    pub noise: f64,
    /// Proportional y shift, dimensionless.
    pub shift: f64,
    pub p_within: f64,
    pub p_between: f64,
    pub seed: u64,
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self {
            noise: 0.0,
            shift: 0.0,
            p_within: 0.0,
            p_between: 0.0,
            seed: 0,
        }
    }
}

impl DistortionConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if !(0.0..=40.0).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 40]", self.noise));
        }
        if !(-0.2..=0.2).contains(&self.shift) {
            return bad(format!("shift {} outside [-0.2, 0.2]", self.shift));
        }
        for (name, p) in [("p_within", self.p_within), ("p_between", self.p_between)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Ranges from which each passage's layout is drawn uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PassageConfig {
    pub min_lines: usize,
    pub max_lines: usize,
    pub min_chars_per_line: usize,
    pub max_chars_per_line: usize,
    /// Line height in whole pixels.
    pub min_line_height: u32,
    pub max_line_height: u32,
    /// Width of one monospace character cell.
    pub char_width: f64,
    pub max_fixations: usize,
}

impl Default for PassageConfig {
    fn default() -> Self {
        Self {
            min_lines: 8,
            max_lines: 14,
            min_chars_per_line: 50,
            max_chars_per_line: 130,
            min_line_height: 49,
            max_line_height: 79,
            char_width: 14.0,
            max_fixations: 500,
        }
    }
}

impl PassageConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::Config(msg.to_string()));
        if !(8 <= self.min_lines && self.min_lines <= self.max_lines && self.max_lines <= 14) {
            return bad("line count range must lie within [8, 14]");
        }
        if !(1 <= self.min_chars_per_line
            && self.min_chars_per_line <= self.max_chars_per_line
            && self.max_chars_per_line <= 130)
        {
            return bad("characters per line must lie within [1, 130]");
        }
        if !(49 <= self.min_line_height
            && self.min_line_height <= self.max_line_height
            && self.max_line_height <= 79)
        {
            return bad("line height range must lie within [49, 79]");
        }
        if self.char_width.is_nan() || self.char_width <= 0.0 {
            return bad("char_width must be positive");
        }
        if !(1..=500).contains(&self.max_fixations) {
            return bad("max_fixations must lie within [1, 500]");
        }
        Ok(())
    }
}

/// Concrete layout parameters of one passage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub lines: usize,
    pub max_chars: usize,
    pub line_height: f64,
    pub char_width: f64,
}

/// Word-wraps corpus words starting at `start` (wrapping around the corpus)
/// into a monospace stimulus: line `i` spans `[i*h, (i+1)*h]`, character `j`
/// spans `[j*w, (j+1)*w]`.
pub fn layout_passage(corpus: &Corpus, start: usize, layout: Layout) -> Result<Stimulus, SimError> {
    let words = corpus.words();
    let mut rows: Vec<String> = Vec::with_capacity(layout.lines);
    let mut current = String::new();
    let mut used = 0usize;
    while rows.len() < layout.lines {
        if used >= words.len() {
            // The words ran out exactly as the last row filled up.
            if !current.is_empty() && rows.len() + 1 == layout.lines {
                rows.push(std::mem::take(&mut current));
                break;
            }
            return Err(SimError::CorpusTooShort {
                needed: used + 1,
                available: words.len(),
            });
        }
        let word = &words[(start + used) % words.len()];
        // Words longer than a line are hard-broken.
        let mut rest: &str = word;
        while !rest.is_empty() && rows.len() < layout.lines {
            let sep = usize::from(!current.is_empty());
            if current.len() + sep + rest.len() <= layout.max_chars {
                if sep == 1 {
                    current.push(' ');
                }
                current.push_str(rest);
                rest = "";
            } else if current.is_empty() {
                let (head, tail) = rest.split_at(layout.max_chars);
                rows.push(head.to_string());
                rest = tail;
            } else {
                rows.push(std::mem::take(&mut current));
            }
        }
        used += 1;
    }
    let mut boxes = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let y0 = i as f64 * layout.line_height;
        let y1 = (i + 1) as f64 * layout.line_height;
        for (j, ch) in row.chars().enumerate() {
            boxes.push(CharBox {
                ch,
                x0: j as f64 * layout.char_width,
                y0,
                x1: (j + 1) as f64 * layout.char_width,
                y1,
                line: i,
            });
        }
    }
    Stimulus::new(boxes, layout.lines).map_err(|e| SimError::Config(e.to_string()))
}

/// Draws a layout uniformly from `cfg` and lays out a passage from a random
/// corpus position.
pub fn generate_passage<R: Rng>(cfg: &PassageConfig, corpus: &Corpus, rng: &mut R) -> Result<(Stimulus, Layout), SimError> {
    cfg.validate()?;
    let layout = Layout {
        lines: rng.random_range(cfg.min_lines..=cfg.max_lines),
        max_chars: rng.random_range(cfg.min_chars_per_line..=cfg.max_chars_per_line),
        line_height: f64::from(rng.random_range(cfg.min_line_height..=cfg.max_line_height)),
        char_width: cfg.char_width,
    };
    let start = rng.random_range(0..corpus.words().len());
    Ok((layout_passage(corpus, start, layout)?, layout))
}

fn triangular<R: Rng>(rng: &mut R, low: f64, high: f64, mode: f64) -> f64 {
    if high - low <= f64::EPSILON * high.abs().max(1.0) {
        return low;
    }
    let mode = mode.clamp(low, high);
    Triangular::new(low, high, mode)
        .expect("validated triangular bounds")
        .sample(rng)
}

/// Generates a reading pass over `stimulus`: one fixation per word (x uniform
/// within the word) in reading order, with within-line and between-line
/// regressions inserted according to `dc`. Truncated at `max_fixations`.
pub fn generate_fixations(stimulus: &Stimulus, dc: &DistortionConfig, max_fixations: usize) -> Result<Vec<Fixation>, SimError> {
    dc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(dc.seed);
    let centers = stimulus.line_centers();
    let lines = stimulus.lines();
    let words = stimulus.words();

    let mut out: Vec<Fixation> = Vec::new();
    let mut clock: u64 = 0;
    let mut emit = |rng: &mut ChaCha8Rng, out: &mut Vec<Fixation>, x: f64, line: usize| {
        let l_y = centers[line];
        let z: f64 = StandardNormal.sample(rng);
        let y = l_y + dc.noise * z + l_y * dc.shift;
        let duration = rng.random_range(180..=330u64);
        out.push(Fixation::new(x, y, clock, duration).with_gold(line));
        clock += duration + rng.random_range(20..=40u64);
    };

    'lines: for (line, geom) in lines.iter().enumerate() {
        let line_words: Vec<_> = words.iter().filter(|w| w.line == line).collect();
        let between_at = if line > 0 && rng.random::<f64>() < dc.p_between {
            Some(rng.random_range(0..line_words.len().max(1)))
        } else {
            None
        };
        for (k, w) in line_words.iter().enumerate() {
            let x = rng.random_range(w.x0..w.x1);
            emit(&mut rng, &mut out, x, line);
            if out.len() >= max_fixations {
                break 'lines;
            }
            if rng.random::<f64>() < dc.p_within {
                let xr = triangular(&mut rng, geom.x_min, x, x);
                emit(&mut rng, &mut out, xr, line);
                if out.len() >= max_fixations {
                    break 'lines;
                }
            }
            if between_at == Some(k) {
                // Most recent lines (and positions nearest the current x) are likeliest.
                let t = triangular(&mut rng, 0.0, line as f64, line as f64);
                let target = (t.floor() as usize).min(line - 1);
                let tg = lines[target];
                let xb = triangular(&mut rng, tg.x_min, tg.x_max, x);
                emit(&mut rng, &mut out, xb, target);
                if out.len() >= max_fixations {
                    break 'lines;
                }
            }
        }
    }
    Ok(out)
}

/// A full synthetic dataset: `passages` passages, each read once under every
/// cell of `grid`. All randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub passage: PassageConfig,
    pub grid: Vec<DistortionConfig>,
    pub passages: usize,
    pub seed: u64,
    pub dataset: String,
}

impl SweepConfig {
    pub fn new(passages: usize, seed: u64, grid: Vec<DistortionConfig>) -> Self {
        Self {
            passage: PassageConfig::default(),
            grid,
            passages,
            seed,
            dataset: "synthetic".into(),
        }
    }

    /// Cartesian product of the given per-factor severity lists.
    pub fn grid_product(noise: &[f64], shift: &[f64], p_within: &[f64], p_between: &[f64]) -> Vec<DistortionConfig> {
        let mut grid = Vec::new();
        for &n in noise {
            for &s in shift {
                for &pw in p_within {
                    for &pb in p_between {
                        grid.push(DistortionConfig {
                            noise: n,
                            shift: s,
                            p_within: pw,
                            p_between: pb,
                            seed: 0,
                        });
                    }
                }
            }
        }
        grid
    }

    pub fn trial_count(&self) -> usize {
        self.passages * self.grid.len()
    }
}

/// SplitMix64 finalizer, used to derive independent per-stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    mix(mix(seed ^ mix(stream)) ^ index)
}

pub fn trial_id(passage: usize, cell: usize) -> String {
    format!("sim_p{passage:04}_c{cell:03}")
}

/// Generates every trial of the sweep, ordered by (passage, cell). Output is
/// identical for both execution modes.
pub fn sweep(cfg: &SweepConfig, corpus: &Corpus, exec: Execution) -> Result<Vec<Trial>, SimError> {
    cfg.passage.validate()?;
    for dc in &cfg.grid {
        dc.validate()?;
    }
    let cells = cfg.grid.len();
    let stimuli = batch::map_range(exec, cfg.passages, |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0, p as u64));
        generate_passage(&cfg.passage, corpus, &mut rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    batch::map_range(exec, cfg.trial_count(), |k| {
        let (p, c) = (k / cells, k % cells);
        let (stimulus, layout) = &stimuli[p];
        let dc = DistortionConfig {
            seed: derive_seed(cfg.seed, 1 + c as u64, p as u64),
            ..cfg.grid[c]
        };
        let fixations = generate_fixations(stimulus, &dc, cfg.passage.max_fixations)?;
        let metadata = BTreeMap::from([
            ("source".to_string(), "simulated".to_string()),
            ("noise".to_string(), format!("{:?}", dc.noise)),
            ("shift".to_string(), format!("{:?}", dc.shift)),
            ("p_within".to_string(), format!("{:?}", dc.p_within)),
            ("p_between".to_string(), format!("{:?}", dc.p_between)),
            ("seed".to_string(), dc.seed.to_string()),
            ("line_height".to_string(), format!("{:?}", layout.line_height)),
            ("char_width".to_string(), format!("{:?}", layout.char_width)),
        ]);
        Ok(Trial {
            id: trial_id(p, c),
            dataset: cfg.dataset.clone(),
            fixations,
            stimulus: stimulus.clone(),
            metadata,
        })
    })
    .into_iter()
    .collect()
}

/// Runs [`sweep`] and saves every trial into `dir`, returning the manifest.
pub fn write_sweep(cfg: &SweepConfig, corpus: &Corpus, dir: &Path, exec: Execution) -> Result<DatasetManifest, SimError> {
    let trials = sweep(cfg, corpus, exec)?;
    for t in &trials {
        io::save_trial(t, dir)?;
    }
    Ok(DatasetManifest::from_ids(cfg.dataset.clone(), trials.iter().map(|t| t.id.as_str())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(lines: usize, h: f64) -> Layout {
        Layout {
            lines,
            max_chars: 60,
            line_height: h,
            char_width: 14.0,
        }
    }

    #[test]
    fn passage_is_deterministic_per_seed() {
        let corpus = Corpus::builtin();
        let cfg = PassageConfig::default();
        let a = generate_passage(&cfg, &corpus, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = generate_passage(&cfg, &corpus, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let s = &a.0;
        assert!((8..=14).contains(&s.line_count()));
        assert!(s.lines().iter().all(|g| g.width() <= 130.0 * 14.0));
    }

    #[test]
    fn ten_lines_at_64_have_expected_centers() {
        let s = layout_passage(&Corpus::builtin(), 0, layout(10, 64.0)).unwrap();
        let expected: Vec<f64> = (0..10).map(|i| 32.0 + 64.0 * i as f64).collect();
        assert_eq!(s.line_centers(), expected);
    }

    #[test]
    fn corpus_too_short() {
        let corpus = Corpus::from_text("just four words here").unwrap();
        assert!(matches!(
            layout_passage(&corpus, 0, layout(8, 50.0)),
            Err(SimError::CorpusTooShort { .. })
        ));
        assert!(Corpus::from_text("é é").is_err());
    }

    #[test]
    fn long_words_are_broken() {
        let corpus = Corpus::from_text(&"x".repeat(150)).unwrap();
        let l = Layout { lines: 2, max_chars: 100, line_height: 50.0, char_width: 10.0 };
        let s = layout_passage(&corpus, 0, l).unwrap();
        assert_eq!(s.boxes().iter().filter(|b| b.line == 0).count(), 100);
        assert_eq!(s.boxes().iter().filter(|b| b.line == 1).count(), 50);
    }

    #[test]
    fn zero_distortion_puts_every_fixation_on_its_center() {
        let s = layout_passage(&Corpus::builtin(), 3, layout(9, 55.0)).unwrap();
        let fx = generate_fixations(&s, &DistortionConfig { seed: 9, ..Default::default() }, 500).unwrap();
        let centers = s.line_centers();
        assert_eq!(fx.len(), s.words().len());
        for f in &fx {
            let g = f.gold_line.unwrap();
            assert_eq!(f.y, centers[g]);
            assert_eq!(s.nearest_line(f.y), g);
            assert_eq!(s.line_overlap(f.y), Some(g));
        }
        // Monotone x within each line's run.
        for w in fx.windows(2) {
            if w[0].gold_line == w[1].gold_line {
                assert!(w[1].x > w[0].x);
            }
        }
    }

    #[test]
    fn shift_endpoint() {
        // A 4-line passage at height 50 puts line 1's center at 75; use a
        // synthetic center of 100 via a one-line stimulus 50..150.
        let boxes = vec![CharBox { ch: 'a', x0: 0.0, y0: 50.0, x1: 10.0, y1: 150.0, line: 0 }];
        let s = Stimulus::new(boxes, 1).unwrap();
        let dc = DistortionConfig { shift: 0.2, ..Default::default() };
        let fx = generate_fixations(&s, &dc, 10).unwrap();
        assert_eq!(fx[0].y, 120.0);
    }

    #[test]
    fn within_line_regressions_double_the_count() {
        let s = layout_passage(&Corpus::builtin(), 0, layout(8, 60.0)).unwrap();
        let base = generate_fixations(&s, &DistortionConfig::default(), 500).unwrap().len();
        let dc = DistortionConfig { p_within: 1.0, ..Default::default() };
        let fx = generate_fixations(&s, &dc, 500).unwrap();
        assert_eq!(fx.len(), 2 * base);
        // Every regression lands between the line start and the preceding fixation.
        for pair in fx.chunks(2) {
            assert!(pair[1].x <= pair[0].x);
            assert_eq!(pair[0].gold_line, pair[1].gold_line);
        }
    }

    #[test]
    fn between_line_regressions_target_earlier_lines() {
        let s = layout_passage(&Corpus::builtin(), 0, layout(12, 60.0)).unwrap();
        let dc = DistortionConfig { p_between: 1.0, seed: 3, ..Default::default() };
        let fx = generate_fixations(&s, &dc, 500).unwrap();
        let base = s.words().len();
        assert_eq!(fx.len(), base + 11);
        let mut max_line = 0;
        let mut regressions = 0;
        for f in &fx {
            let g = f.gold_line.unwrap();
            if g < max_line {
                regressions += 1;
            }
            max_line = max_line.max(g);
        }
        assert_eq!(regressions, 11);
    }

    #[test]
    fn truncation_and_validation() {
        let s = layout_passage(&Corpus::builtin(), 0, layout(14, 60.0)).unwrap();
        let dc = DistortionConfig { p_within: 1.0, ..Default::default() };
        assert_eq!(generate_fixations(&s, &dc, 37).unwrap().len(), 37);
        let bad = DistortionConfig { noise: 41.0, ..Default::default() };
        assert!(generate_fixations(&s, &bad, 10).is_err());
        let bad = PassageConfig { max_lines: 15, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sweep_counts_and_is_execution_independent() {
        let grid = SweepConfig::grid_product(&[0.0, 10.0, 20.0], &[0.0], &[0.0], &[0.0]);
        let cfg = SweepConfig::new(2, 11, grid);
        let corpus = Corpus::builtin();
        let seq = sweep(&cfg, &corpus, Execution::Sequential).unwrap();
        let par = sweep(&cfg, &corpus, Execution::Parallel).unwrap();
        assert_eq!(seq.len(), 6);
        assert_eq!(seq, par);
        assert_eq!(seq[0].stimulus, seq[2].stimulus);
        assert_ne!(seq[0].stimulus, seq[3].stimulus);
    }

    #[test]
    fn noise_residual_std_matches_configuration() {
        let grid = SweepConfig::grid_product(&[0.0, 40.0], &[0.0], &[0.0], &[0.0]);
        let trials = sweep(&SweepConfig::new(1, 2, grid), &Corpus::builtin(), Execution::Parallel).unwrap();
        let noisy = &trials[1];
        let centers = noisy.stimulus.line_centers();
        let res: Vec<f64> = noisy.fixations.iter().map(|f| f.y - centers[f.gold_line.unwrap()]).collect();
        let n = res.len() as f64;
        let mean = res.iter().sum::<f64>() / n;
        let std = (res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((std - 40.0).abs() < 0.15 * 40.0, "std {std} over {n} fixations");
        assert!(trials[0].fixations.iter().all(|f| f.y == centers[f.gold_line.unwrap()]));
    }
}
