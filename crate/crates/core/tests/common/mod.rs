#![allow(dead_code)]

use std::collections::BTreeMap;

use driftlab_core::trial::{CharBox, Fixation, Stimulus, Trial};
use proptest::prelude::*;

pub fn row(line: usize, y0: f64, y1: f64, text: &str, x_start: f64, cw: f64) -> Vec<CharBox> {
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

/// Stimulus geometry on an integer grid: origin, per-line height and gap,
/// character width and one text per line.
#[derive(Debug, Clone)]
pub struct Layout {
    pub origin: (i32, i32),
    pub cw: i32,
    pub lines: Vec<(i32, i32, String)>,
}

impl Layout {
    pub fn stimulus(&self) -> Stimulus {
        let mut boxes = Vec::new();
        let mut y = self.origin.1 as f64;
        for (i, (h, gap, text)) in self.lines.iter().enumerate() {
            boxes.extend(row(i, y, y + *h as f64, text, self.origin.0 as f64, self.cw as f64));
            y += (*h + *gap) as f64;
        }
        Stimulus::new(boxes, self.lines.len()).unwrap()
    }
}

pub fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-zA-Z]{1,9}", 1..8).prop_map(|w| w.join(" "))
}

pub fn layout_strategy(max_lines: usize) -> impl Strategy<Value = Layout> {
    (
        (-200i32..200, -200i32..200),
        6i32..16,
        prop::collection::vec((20i32..80, 0i32..25, text_strategy()), 1..=max_lines),
    )
        .prop_map(|(origin, cw, lines)| Layout { origin, cw, lines })
}

/// A trial with integer fixation coordinates spread over and around the stimulus.
pub fn trial_strategy(max_lines: usize, max_fixations: usize) -> impl Strategy<Value = Trial> {
    layout_strategy(max_lines).prop_flat_map(move |layout| {
        let s = layout.stimulus();
        let (x0, y0, x1, y1) = s.extent();
        let m = s.line_count();
        let fix = (
            (x0 as i32 - 100)..(x1 as i32 + 100),
            (y0 as i32 - 60)..(y1 as i32 + 60),
            1u64..400,
            0..m,
            any::<bool>(),
        );
        (Just(s), prop::collection::vec(fix, 1..=max_fixations))
    })
    .prop_map(|(stimulus, fx)| {
        let mut t = 0u64;
        let fixations = fx
            .into_iter()
            .map(|(x, y, d, gold, discarded)| {
                let mut f = Fixation::new(x as f64, y as f64, t, d).with_gold(gold);
                f.discarded = discarded;
                t += d + 25;
                f
            })
            .collect();
        Trial {
            id: "fuzz".into(),
            dataset: "fuzz".into(),
            fixations,
            stimulus,
            metadata: BTreeMap::new(),
        }
    })
}

pub fn translate(trial: &Trial, dx: f64, dy: f64) -> Trial {
    let boxes = trial
        .stimulus
        .boxes()
        .iter()
        .map(|b| CharBox {
            x0: b.x0 + dx,
            x1: b.x1 + dx,
            y0: b.y0 + dy,
            y1: b.y1 + dy,
            ..b.clone()
        })
        .collect();
    let mut t = trial.clone();
    t.stimulus = Stimulus::new(boxes, trial.line_count()).unwrap();
    for f in &mut t.fixations {
        f.x += dx;
        f.y += dy;
    }
    t
}
