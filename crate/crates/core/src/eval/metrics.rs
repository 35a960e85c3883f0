// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::GroundTruth;

/// Default matching radius `max(5, ⌈0.02·n⌉)`.
pub fn default_delta(n: usize) -> usize {
    (n * 2).div_ceil(100).max(5)
}

/// Outcome counts under tolerance-window matching. Negatives are the
/// instants not within `tolerance` of any true change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub tolerance: usize,
}

impl ConfusionCounts {
    /// Element-wise sum; tolerances must agree.
    pub fn merge(self, other: Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub far: f64,
    pub mdr: f64,
}

/// Greedy one-to-one matching: estimates in ascending order each claim the
/// nearest unmatched truth within `delta` (the earlier one on ties).
pub fn match_detections(
    estimates: &[usize],
    truth: &GroundTruth,
    delta: usize,
    n: usize,
) -> Result<ConfusionCounts> {
    if let Some(&e) = estimates.iter().find(|&&e| e < 1 || e > n) {
        return Err(Error::bounds(format!("estimate {e} outside [1, {n}]")));
    }
    if let Some(&t) = truth.indices().iter().find(|&&t| t > n) {
        return Err(Error::bounds(format!("true change {t} outside [1, {n}]")));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_unstable();
    let mut matched = vec![false; truth.len()];
    let (mut tp, mut fp) = (0, 0);
    for e in sorted {
        let best = truth
            .indices()
            .iter()
            .enumerate()
            .filter(|(k, &t)| !matched[*k] && t.abs_diff(e) <= delta)
            .min_by_key(|(_, &t)| (t.abs_diff(e), t));
        match best {
            Some((k, _)) => {
                matched[k] = true;
                tp += 1;
            }
            None => fp += 1,
        }
    }
    let fn_ = matched.iter().filter(|m| !**m).count();
    let near = (1..=n)
        .filter(|&t| truth.indices().iter().any(|&c| c.abs_diff(t) <= delta))
        .count();
    Ok(ConfusionCounts {
        tp,
        fp,
        fn_,
        tn: (n - near).saturating_sub(fp),
        tolerance: delta,
    })
}

/// `FAR = fp/(fp+tn)`, `MDR = fn/(fn+tp)`, each 0 on an empty denominator.
pub fn far_mdr(c: &ConfusionCounts) -> Metrics {
    let ratio = |a: usize, b: usize| {
        if a + b == 0 {
            0.0
        } else {
            a as f64 / (a + b) as f64
        }
    };
    Metrics {
        far: ratio(c.fp, c.tn),
        mdr: ratio(c.fn_, c.tp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn truth(v: &[usize], n: usize) -> GroundTruth {
        GroundTruth::new(v.to_vec(), n).unwrap()
    }

    #[test]
    fn matching_examples() {
        let t = truth(&[150], 500);
        let c = match_detections(&[152], &t, 5, 500).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (1, 0, 0));
        let c = match_detections(&[10], &t, 5, 500).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (0, 1, 1));
        let c = match_detections(&[], &t, 5, 500).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (0, 0, 1));
        assert_eq!(c.tn, 500 - 11);
    }

    #[test]
    fn one_to_one() {
        let t = truth(&[100], 300);
        let c = match_detections(&[98, 101], &t, 5, 300).unwrap();
        assert_eq!((c.tp, c.fp), (1, 1));
    }

    #[test]
    fn metric_examples() {
        let m = far_mdr(&ConfusionCounts {
            fp: 1,
            tn: 99,
            ..Default::default()
        });
        assert_eq!(m.far, 0.01);
        let m = far_mdr(&ConfusionCounts {
            fn_: 3,
            tp: 4,
            ..Default::default()
        });
        assert!((m.mdr - 3.0 / 7.0).abs() < 1e-15);
        let m = far_mdr(&ConfusionCounts {
            tp: 2,
            tn: 50,
            ..Default::default()
        });
        assert_eq!((m.far, m.mdr), (0.0, 0.0));
        assert_eq!(
            far_mdr(&ConfusionCounts::default()),
            Metrics { far: 0.0, mdr: 0.0 }
        );
    }

    #[test]
    fn default_delta_values() {
        assert_eq!(default_delta(100), 5);
        assert_eq!(default_delta(500), 10);
        assert_eq!(default_delta(2000), 40);
        assert_eq!(default_delta(501), 11);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(match_detections(&[0], &truth(&[5], 10), 1, 10).is_err());
        assert!(match_detections(&[11], &truth(&[5], 10), 1, 10).is_err());
    }

    proptest! {
        #[test]
        fn matching_invariants(
            mut est in prop::collection::vec(1usize..=400, 0..12),
            raw in prop::collection::btree_set(2usize..=400, 0..6),
            delta in 0usize..30,
        ) {
            let t = GroundTruth::new(raw.into_iter().collect(), 400).unwrap();
            let c = match_detections(&est, &t, delta, 400).unwrap();
            prop_assert_eq!(c.tp + c.fn_, t.len());
            prop_assert!(c.tp <= est.len());
            let m = far_mdr(&c);
            prop_assert!((0.0..=1.0).contains(&m.far) && (0.0..=1.0).contains(&m.mdr));
            est.reverse();
            prop_assert_eq!(match_detections(&est, &t, delta, 400).unwrap(), c);
        }
    }
}
