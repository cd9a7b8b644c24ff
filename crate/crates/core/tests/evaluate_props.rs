mod common;

use driftlab_core::evaluate::{confusion, dataset_accuracy, relative_accuracy};
use driftlab_core::trial::{Assignment, Source, Trial};
use proptest::prelude::*;

use common::trial_strategy;

fn labeled_with_preds() -> impl Strategy<Value = (Vec<Trial>, Vec<Assignment>)> {
    prop::collection::vec(trial_strategy(5, 15), 1..6)
        .prop_flat_map(|trials| {
            let preds: Vec<_> = trials
                .iter()
                .map(|t| prop::collection::vec(0..t.line_count(), t.fixations.len()))
                .collect();
            (Just(trials), preds)
        })
        .prop_map(|(mut trials, preds)| {
            let mut out = Vec::new();
            for (i, (t, p)) in trials.iter_mut().zip(preds).enumerate() {
                t.id = format!("t{i}");
                // Keep at least one fixation in play.
                t.fixations[0].discarded = false;
                out.push(Assignment::new(t.id.clone(), p, Source::Woc));
            }
            (trials, out)
        })
}

proptest! {
    #[test]
    fn confusion_rows_sum_to_one_or_zero((trials, preds) in labeled_with_preds()) {
        let k = trials.iter().map(Trial::line_count).max().unwrap();
        let m = confusion(&preds, &trials, k).unwrap();
        for row in &m {
            let s: f64 = row.iter().sum();
            prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-12, "{s}");
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        // Brute-force tally of one row.
        for (g, row) in m.iter().enumerate() {
            let mut counts = vec![0usize; k];
            for (t, p) in trials.iter().zip(&preds) {
                for (f, &l) in t.fixations.iter().zip(&p.lines) {
                    if !f.discarded && f.gold_line == Some(g) {
                        counts[l] += 1;
                    }
                }
            }
            let n: usize = counts.iter().sum();
            for (p, &c) in counts.iter().enumerate() {
                let expected = if n == 0 { 0.0 } else { c as f64 / n as f64 };
                prop_assert_eq!(row[p], expected);
            }
        }
    }

    #[test]
    fn dataset_accuracy_ignores_trial_order((trials, preds) in labeled_with_preds()) {
        let a = dataset_accuracy(&preds, &trials).unwrap();
        let mut rt = trials.clone();
        rt.reverse();
        let mut rp = preds.clone();
        rp.rotate_left(1);
        let b = dataset_accuracy(&rp, &rt).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn relative_accuracy_antisymmetry(a in 0.01f64..100.0, b in 0.01f64..100.0) {
        let ab = relative_accuracy(a, b).unwrap();
        let ba = relative_accuracy(b, a).unwrap();
        if a == b {
            prop_assert_eq!(ab, 0.0);
        } else {
            prop_assert!(ab != -ba || ab == 0.0);
            prop_assert_eq!(ab > 0.0, ba < 0.0);
        }
    }
}
