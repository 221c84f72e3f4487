//! Confusion-matrix bookkeeping and the learning metrics reported per silo:
//! accuracy, precision, recall, F1, miss rate, fallout and ROC/AUC over
//! anomaly scores.
//!
//! Attack is the positive class throughout. Two miss-rate variants are
//! reported: `missrate_paper` uses FN/(FN+TN) and `fnr_standard` the usual
//! FN/(FN+TP); they only coincide on balanced confusion matrices, so both are
//! kept side by side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with attack as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Flat report of every metric for one evaluation.
///
/// Degenerate cases (zero denominators, single-class AUC) report 0.0 and are
/// listed by name in `degenerate` so downstream consumers can tell a true
/// zero from an undefined one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// FN / (FN + TN), the form printed in the reference tables.
    pub missrate_paper: f64,
    /// FN / (FN + TP), the conventional false negative rate.
    pub fnr_standard: f64,
    pub fallout: f64,
    pub auc: f64,
    #[serde(flatten)]
    pub confusion: ConfusionMatrix,
    pub degenerate: Vec<String>,
}

impl MetricsReport {
    /// Attaches an AUC value computed separately from the thresholded counts.
    pub fn with_auc(mut self, auc: Option<f64>) -> Self {
        self.degenerate.retain(|f| f != "auc");
        match auc {
            Some(v) => self.auc = v,
            None => {
                self.auc = 0.0;
                self.degenerate.push("auc".to_string());
            }
        }
        self
    }
}

/// Counts the confusion matrix from actual and predicted binary labels.
pub fn confusion(actual: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for (&a, &p) in actual.iter().zip(predicted) {
        match (a != 0, p != 0) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if den == 0 {
        degenerate.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Derives every thresholded metric from a confusion matrix. AUC is not a
/// confusion-matrix quantity; it is filled in via [`MetricsReport::with_auc`].
pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let mut degenerate = Vec::new();
    let accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy", &mut degenerate);
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", &mut degenerate);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall", &mut degenerate);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        degenerate.push("f1".to_string());
        0.0
    };
    let missrate_paper = ratio(cm.fn_, cm.fn_ + cm.tn, "missrate_paper", &mut degenerate);
    let fnr_standard = ratio(cm.fn_, cm.fn_ + cm.tp, "fnr_standard", &mut degenerate);
    let fallout = ratio(cm.fp, cm.fp + cm.tn, "fallout", &mut degenerate);
    degenerate.push("auc".to_string());
    MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        missrate_paper,
        fnr_standard,
        fallout,
        auc: 0.0,
        confusion: *cm,
        degenerate,
    }
}

/// Area under the ROC curve of `scores` against binary labels, higher score
/// meaning more anomalous. Equal scores are grouped into a single threshold
/// step, which makes the trapezoidal sweep equivalent to the rank-sum
/// statistic with midrank tie handling.
pub fn roc_auc(scores: &[f64], actual: &[u8]) -> Result<f64> {
    if scores.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: actual.len(),
        });
    }
    let n_pos = actual.iter().filter(|&&a| a != 0).count();
    let n_neg = actual.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassAuc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .partial_cmp(&scores[i])
            .expect("non-finite score in roc_auc")
    });

    let mut auc = 0.0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let (mut prev_tpr, mut prev_fpr) = (0.0f64, 0.0f64);
    let mut k = 0;
    while k < order.len() {
        // consume the whole group of equal scores before emitting a point
        let score = scores[order[k]];
        while k < order.len() && scores[order[k]] == score {
            if actual[order[k]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let tpr = tp as f64 / n_pos as f64;
        let fpr = fp as f64 / n_neg as f64;
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Ok(auc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn confusion_counts_by_hand() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!((cm.tp, cm.fn_, cm.fp, cm.tn), (1, 1, 1, 1));
    }

    #[test]
    fn confusion_perfect_prediction() {
        let cm = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(cm.fp, 0);
        assert_eq!(cm.fn_, 0);
    }

    #[test]
    fn confusion_rejects_empty_and_mismatched() {
        assert!(matches!(confusion(&[], &[]), Err(Error::EmptyDataset)));
        assert!(matches!(
            confusion(&[1], &[1, 0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn metrics_all_ones_matrix() {
        let cm = ConfusionMatrix {
            tp: 1,
            fp: 1,
            fn_: 1,
            tn: 1,
        };
        let r = compute_metrics(&cm);
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 0.5);
        assert_eq!(r.f1, 0.5);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.missrate_paper, 0.5);
        assert_eq!(r.fallout, 0.5);
    }

    #[test]
    fn metrics_perfect_detector() {
        let cm = ConfusionMatrix {
            tp: 10,
            fp: 0,
            fn_: 0,
            tn: 90,
        };
        let r = compute_metrics(&cm);
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.f1, 1.0);
        assert_eq!(r.fallout, 0.0);
        assert_eq!(r.missrate_paper, 0.0);
    }

    #[test]
    fn metrics_degenerate_flags() {
        // all benign, all predicted benign: precision/recall/f1 undefined
        let cm = confusion(&[0, 0, 0], &[0, 0, 0]).unwrap();
        let r = compute_metrics(&cm);
        assert_eq!(r.f1, 0.0);
        assert_eq!(r.fallout, 0.0);
        assert!(r.degenerate.iter().any(|f| f == "precision"));
        assert!(r.degenerate.iter().any(|f| f == "recall"));
        assert!(r.degenerate.iter().any(|f| f == "f1"));
    }

    #[test]
    fn metrics_match_recount_on_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(1..200);
            let actual: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            let predicted: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            let cm = confusion(&actual, &predicted).unwrap();
            // brute-force recount
            let tp = actual
                .iter()
                .zip(&predicted)
                .filter(|(&a, &p)| a == 1 && p == 1)
                .count() as u64;
            let fp = actual
                .iter()
                .zip(&predicted)
                .filter(|(&a, &p)| a == 0 && p == 1)
                .count() as u64;
            assert_eq!(cm.tp, tp);
            assert_eq!(cm.fp, fp);
            assert_eq!(cm.total(), n as u64);
            let r = compute_metrics(&cm);
            for v in [
                r.accuracy,
                r.precision,
                r.recall,
                r.f1,
                r.missrate_paper,
                r.fnr_standard,
                r.fallout,
            ] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn auc_perfect_separation() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let actual = [1, 1, 0, 0];
        assert_eq!(roc_auc(&scores, &actual).unwrap(), 1.0);
    }

    #[test]
    fn auc_single_class_is_an_error() {
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[1, 1]),
            Err(Error::SingleClassAuc)
        ));
    }

    #[test]
    fn auc_ties_get_half_credit() {
        // one attack and one benign sharing the same score -> 0.5
        assert_eq!(roc_auc(&[0.5, 0.5], &[1, 0]).unwrap(), 0.5);
    }

    /// Rank-sum (Mann-Whitney) oracle with midranks for ties.
    fn mann_whitney_auc(scores: &[f64], actual: &[u8]) -> f64 {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).unwrap());
        let mut ranks = vec![0.0f64; scores.len()];
        let mut k = 0;
        while k < order.len() {
            let mut j = k;
            while j < order.len() && scores[order[j]] == scores[order[k]] {
                j += 1;
            }
            let midrank = (k + 1 + j) as f64 / 2.0;
            for &idx in &order[k..j] {
                ranks[idx] = midrank;
            }
            k = j;
        }
        let n_pos = actual.iter().filter(|&&a| a != 0).count() as f64;
        let n_neg = actual.len() as f64 - n_pos;
        let rank_sum: f64 = ranks
            .iter()
            .zip(actual)
            .filter(|(_, &a)| a != 0)
            .map(|(r, _)| r)
            .sum();
        (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
    }

    #[test]
    fn auc_matches_rank_sum_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for case in 0..50 {
            let n = rng.gen_range(5..100);
            let mut actual: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            actual[0] = 1;
            actual[1] = 0;
            // quantized scores so ties actually occur
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0..20) as f64) / 20.0)
                .collect();
            let ours = roc_auc(&scores, &actual).unwrap();
            let oracle = mann_whitney_auc(&scores, &actual);
            assert!(
                (ours - oracle).abs() < 1e-9,
                "case {case}: {ours} vs {oracle}"
            );
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let actual: Vec<u8> = (0..200).map(|_| rng.gen_range(0..=1)).collect();
        let scores: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s + 1.0).exp()).collect();
        let a = roc_auc(&scores, &actual).unwrap();
        let b = roc_auc(&transformed, &actual).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn report_serializes_flat_and_stable() {
        let r = compute_metrics(&ConfusionMatrix {
            tp: 2,
            fp: 1,
            fn_: 0,
            tn: 3,
        })
        .with_auc(Some(0.75));
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "accuracy",
            "precision",
            "recall",
            "f1",
            "missrate_paper",
            "fnr_standard",
            "fallout",
            "auc",
            "tp",
            "fp",
            "fn",
            "tn",
            "degenerate",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
    }
}
