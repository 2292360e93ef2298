//! Binary classification counts and precision / recall / F1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::invalid("cannot score an empty prediction list"));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (Label::Positive, Label::Positive) => c.tp += 1,
            (Label::Positive, Label::Negative) => c.fp += 1,
            (Label::Negative, Label::Negative) => c.tn += 1,
            (Label::Negative, Label::Positive) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> f64 {
    // 0/0 counts as 0 so degenerate sweep rows stay representable.
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> Metrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        precision,
        recall,
        f1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Negative as N, Positive as P};

    #[test]
    fn one_of_each_cell() {
        let c = confusion(&[P, P, N, N], &[P, N, N, P]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
    }

    #[test]
    fn all_correct_and_single_false_positive() {
        let c = confusion(&[P, N], &[P, N]).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (1, 1, 0, 0));
        let c = confusion(&[P], &[N]).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (0, 0, 1, 0));
    }

    #[test]
    fn rejects_mismatched_or_empty() {
        assert!(confusion(&[P], &[P, N]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn metric_examples() {
        let m = compute_metrics(&ConfusionCounts {
            tp: 96,
            fp: 4,
            fn_: 4,
            tn: 96,
        });
        assert!((m.precision - 0.96).abs() < 1e-15);
        assert!((m.recall - 0.96).abs() < 1e-15);
        assert!((m.f1 - 0.96).abs() < 1e-15);

        let m = compute_metrics(&ConfusionCounts {
            tp: 10,
            ..Default::default()
        });
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));

        let m = compute_metrics(&ConfusionCounts {
            fn_: 5,
            ..Default::default()
        });
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    fn label() -> impl Strategy<Value = Label> {
        any::<bool>().prop_map(Label::from_bool)
    }

    proptest! {
        #[test]
        fn metrics_in_unit_interval_and_f1_harmonic(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
            let m = compute_metrics(&ConfusionCounts { tp, fp, tn, fn_ });
            for x in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
            if m.precision + m.recall > 0.0 {
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f1 - h).abs() < 1e-12);
            }
        }

        #[test]
        fn confusion_is_permutation_equivariant(
            pairs in prop::collection::vec((label(), label()), 1..60),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let (p, y): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let before = confusion(&p, &y).unwrap();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (p2, y2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            prop_assert_eq!(before, confusion(&p2, &y2).unwrap());
            prop_assert_eq!(before.total(), pairs.len() as u64);
        }
    }
}
