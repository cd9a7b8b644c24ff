mod common;

use std::collections::BTreeMap;

use driftlab_core::io::{fixations_csv, load_dataset, load_trial, save_trial, trial_json};
use driftlab_core::trial::{CharBox, Fixation, Stimulus, Trial};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn any_coordinate() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        (-5000i32..5000).prop_map(f64::from),
        Just(0.1 + 0.2),
        Just(-0.0),
        Just(1e-300),
    ]
}

fn fuzz_trial() -> impl Strategy<Value = Trial> {
    let line = (prop::collection::vec(prop::char::any(), 1..12), 1.0f64..90.0, 0.0f64..30.0);
    (
        "[a-zA-Z0-9_-]{1,16}",
        "[a-z]{0,8}",
        prop::collection::vec(line, 1..5),
        0.5f64..20.0,
        prop::collection::btree_map("[a-z]{1,6}", "[ -~]{0,12}", 0..4),
    )
        .prop_flat_map(|(id, dataset, lines, cw, metadata)| {
            let m = lines.len();
            let fix = (
                any_coordinate(),
                any_coordinate(),
                0u64..1_000_000,
                1u64..5000,
                prop::option::of(0..m),
                any::<bool>(),
            );
            (Just((id, dataset, lines, cw, metadata)), prop::collection::vec(fix, 1..30))
        })
        .prop_map(|((id, dataset, lines, cw, metadata), fx)| {
            let mut boxes = Vec::new();
            let mut y = 3.25;
            for (i, (chars, h, gap)) in lines.iter().enumerate() {
                for (j, &ch) in chars.iter().enumerate() {
                    boxes.push(CharBox {
                        ch,
                        x0: 10.0 + j as f64 * cw,
                        y0: y,
                        x1: 10.0 + (j + 1) as f64 * cw,
                        y1: y + h,
                        line: i,
                    });
                }
                y += h + gap;
            }
            let fixations = fx
                .into_iter()
                .map(|(x, y, start, duration, gold, discarded)| {
                    let mut f = Fixation::new(x, y, start, duration);
                    f.gold_line = gold;
                    // Unlabeled fixations must be discarded for the trial to validate.
                    f.discarded = discarded || gold.is_none();
                    f
                })
                .collect();
            Trial {
                id,
                dataset,
                fixations,
                stimulus: Stimulus::new(boxes, lines.len()).unwrap(),
                metadata: metadata.into_iter().collect::<BTreeMap<_, _>>(),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn load_of_save_is_identity(t in fuzz_trial()) {
        let dir = tempfile::tempdir().unwrap();
        let (csv, json) = save_trial(&t, dir.path()).unwrap();
        let back = load_trial(&csv, &json).unwrap();
        prop_assert_eq!(&back, &t);
        for (a, b) in back.fixations.iter().zip(&t.fixations) {
            prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
            prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
        let csv_bytes = std::fs::read(&csv).unwrap();
        let json_bytes = std::fs::read(&json).unwrap();
        let other = tempfile::tempdir().unwrap();
        let (csv2, json2) = save_trial(&back, other.path()).unwrap();
        prop_assert_eq!(std::fs::read(csv2).unwrap(), csv_bytes);
        prop_assert_eq!(std::fs::read(json2).unwrap(), json_bytes);
        prop_assert_eq!(fixations_csv(&t.fixations), fixations_csv(&back.fixations));
        prop_assert_eq!(trial_json(&t), trial_json(&back));
    }
}

#[test]
fn dataset_of_fuzzed_trials() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let dir = tempfile::tempdir().unwrap();
    let mut saved = Vec::new();
    for i in 0..10 {
        let mut t = fuzz_trial().new_tree(&mut runner).unwrap().current();
        t.id = format!("trial_{i:02}");
        save_trial(&t, dir.path()).unwrap();
        saved.push(t);
    }
    assert_eq!(load_dataset(dir.path()).unwrap(), saved);
}
