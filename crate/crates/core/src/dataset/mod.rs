//! Flow datasets: NetFlow-style CSV ingestion, min-max scaling, the
//! train/validation/test splits, uniform sampling and synthetic silo
//! generation.
//!
//! A [`FlowDataset`] is immutable after construction; every operation here is
//! a pure function of its inputs and a seed, so repeated runs reproduce the
//! same silos bit for bit.

mod cache;
mod loader;
mod scale;
mod synth;

pub use cache::{read_cache, write_cache};
pub use loader::load_csv;
pub use scale::{apply_minmax, fit_minmax, ScalerParams};
pub use synth::{generate_synthetic_silo, generate_synthetic_silos, ClusterSpec, SyntheticSiloSpec};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::round_half_up;

/// Column roles for a flow CSV. Identifier columns (addresses, ports) and
/// excluded columns (attack name, dataset name) never reach the model input.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSchema {
    /// Model input columns, in order. Empty means "infer from the header":
    /// everything that is not an identifier, excluded or the label.
    #[serde(default)]
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub identifier_columns: Vec<String>,
    pub label_column: String,
    #[serde(default)]
    pub excluded_columns: Vec<String>,
}

/// Where a dataset came from and what was stripped on the way in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub silo: String,
    pub tag: String,
    /// Identifier/excluded columns that were present in the source and moved
    /// out of the feature matrix.
    #[serde(default)]
    pub dropped_columns: Vec<String>,
    /// Data-quality notes, e.g. `inseparable` for degenerate synthetic specs.
    #[serde(default)]
    pub flags: Vec<String>,
}

/// Dense matrix of scaled flow features plus the per-row binary label.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<u8>,
    pub schema: FlowSchema,
    pub provenance: Provenance,
}

impl FlowDataset {
    /// Builds a dataset from a row-major feature buffer and labels.
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<u8>,
        schema: FlowSchema,
        provenance: Provenance,
    ) -> Result<Self> {
        if n_features == 0 && !features.is_empty() {
            return Err(Error::InvalidParameter {
                name: "n_features",
                reason: "zero columns with non-empty data".into(),
            });
        }
        if n_features > 0 && features.len() % n_features != 0 {
            return Err(Error::InvalidParameter {
                name: "features",
                reason: format!("buffer of {} not divisible by {n_features}", features.len()),
            });
        }
        let rows = if n_features == 0 { 0 } else { features.len() / n_features };
        if rows != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows,
                right: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().position(|&l| l > 1) {
            return Err(Error::InvalidLabel {
                row: bad + 1,
                value: labels[bad].to_string(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "features",
                reason: "non-finite value in feature matrix".into(),
            });
        }
        Ok(Self {
            features,
            n_features,
            labels,
            schema,
            provenance,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    /// Row-major feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_benign(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 0).count()
    }

    pub fn n_attack(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            features,
            n_features: self.n_features,
            labels,
            schema: self.schema.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Rows whose label is 0.
    pub fn benign_rows(&self) -> Self {
        let idx: Vec<usize> = (0..self.n_rows()).filter(|&i| self.labels[i] == 0).collect();
        self.select_rows(&idx)
    }
}

/// Train/validation/test views of one silo (72% / 8% / 20% of the rows).
#[derive(Debug, Clone)]
pub struct SplitBundle {
    pub train: FlowDataset,
    pub validation: FlowDataset,
    pub test: FlowDataset,
    pub seed: u64,
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

fn split_two(ds: &FlowDataset, small_fraction: f64, seed: u64) -> Result<(FlowDataset, FlowDataset)> {
    if !(small_fraction > 0.0 && small_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "fraction",
            reason: format!("{small_fraction} outside (0, 1)"),
        });
    }
    let n = ds.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    // round-half-up on the smaller partition; the remainder goes to the larger
    let n_small = round_half_up(n as f64 * small_fraction);
    let idx = shuffled_indices(n, seed);
    let large = ds.select_rows(&idx[..n - n_small]);
    let small = ds.select_rows(&idx[n - n_small..]);
    Ok((large, small))
}

/// Shuffled 80/20-style split; `test_fraction` is the share of the second output.
pub fn split_train_test(
    ds: &FlowDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(FlowDataset, FlowDataset)> {
    split_two(ds, test_fraction, seed)
}

/// Carves a validation set out of the training rows (90/10 by default).
pub fn split_train_val(
    train: &FlowDataset,
    val_fraction: f64,
    seed: u64,
) -> Result<(FlowDataset, FlowDataset)> {
    split_two(train, val_fraction, seed)
}

/// Splits a validation set into its benign and attack rows, preserving order.
/// Either side may be empty; the detector decides what that means.
pub fn partition_validation_by_label(val: &FlowDataset) -> (FlowDataset, FlowDataset) {
    let benign: Vec<usize> = (0..val.n_rows()).filter(|&i| val.labels()[i] == 0).collect();
    let attack: Vec<usize> = (0..val.n_rows()).filter(|&i| val.labels()[i] == 1).collect();
    (val.select_rows(&benign), val.select_rows(&attack))
}

/// Uniform sample of `n` rows without replacement. No stratification: class
/// proportions are preserved only in expectation.
pub fn sample_uniform(ds: &FlowDataset, n: usize, seed: u64) -> Result<FlowDataset> {
    if n > ds.n_rows() {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: ds.n_rows(),
        });
    }
    let idx = shuffled_indices(ds.n_rows(), seed);
    Ok(ds.select_rows(&idx[..n]))
}

#[cfg(test)]
pub(crate) fn test_dataset(features: Vec<f64>, n_features: usize, labels: Vec<u8>) -> FlowDataset {
    FlowDataset::new(
        features,
        n_features,
        labels,
        FlowSchema {
            feature_names: (0..n_features).map(|i| format!("f{i}")).collect(),
            label_column: "label".into(),
            ..Default::default()
        },
        Provenance {
            silo: "test".into(),
            tag: "unit".into(),
            ..Default::default()
        },
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labeled(n: usize, attack_every: usize) -> FlowDataset {
        let features: Vec<f64> = (0..n * 2).map(|i| (i % 97) as f64 / 97.0).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % attack_every == 0)).collect();
        test_dataset(features, 2, labels)
    }

    #[test]
    fn split_sizes_follow_round_half_up() {
        let ds = labeled(10, 3);
        let (train, test) = split_train_test(&ds, 0.2, 1).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (8, 2));

        let ds = labeled(100, 3);
        let (train, val) = split_train_val(&ds, 0.1, 1).unwrap();
        assert_eq!((train.n_rows(), val.n_rows()), (90, 10));

        // 9 rows at 0.1: round-half-up(0.9) = 1
        let ds = labeled(9, 3);
        let (train, val) = split_train_val(&ds, 0.1, 1).unwrap();
        assert_eq!((train.n_rows(), val.n_rows()), (8, 1));
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let ds = labeled(50, 4);
        let (a1, b1) = split_train_test(&ds, 0.2, 7).unwrap();
        let (a2, b2) = split_train_test(&ds, 0.2, 7).unwrap();
        assert_eq!(a1.features(), a2.features());
        assert_eq!(b1.labels(), b2.labels());

        let (a3, _) = split_train_test(&ds, 0.2, 8).unwrap();
        assert_eq!(a3.n_rows(), a1.n_rows());
        assert_ne!(a3.features(), a1.features());
    }

    #[test]
    fn split_rejects_tiny_datasets() {
        let ds = labeled(1, 1);
        assert!(matches!(
            split_train_test(&ds, 0.2, 0),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn partition_by_label_counts() {
        let ds = test_dataset(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 2, vec![0, 1, 0]);
        let (benign, attack) = partition_validation_by_label(&ds);
        assert_eq!(benign.n_rows(), 2);
        assert_eq!(attack.n_rows(), 1);
        assert_eq!(attack.row(0), &[0.3, 0.4]);

        let all_benign = test_dataset(vec![0.0; 4], 2, vec![0, 0]);
        let (b, a) = partition_validation_by_label(&all_benign);
        assert_eq!(b.n_rows(), 2);
        assert!(a.is_empty());

        let all_attack = test_dataset(vec![0.0; 4], 2, vec![1, 1]);
        let (b, a) = partition_validation_by_label(&all_attack);
        assert!(b.is_empty());
        assert_eq!(a.n_rows(), 2);
    }

    #[test]
    fn sample_full_size_is_a_permutation() {
        let ds = labeled(20, 5);
        let sampled = sample_uniform(&ds, 20, 3).unwrap();
        assert_eq!(sampled.n_rows(), 20);
        assert_eq!(sampled.n_attack(), ds.n_attack());
        assert_ne!(sampled.features(), ds.features());
    }

    #[test]
    fn sample_too_large_errors() {
        let ds = labeled(5, 2);
        assert!(matches!(
            sample_uniform(&ds, 6, 0),
            Err(Error::SampleTooLarge { .. })
        ));
    }

    #[test]
    fn sample_preserves_skew_within_binomial_ci() {
        // 1000 rows at 99.6% attack, sample 100: attack fraction stays within
        // the 99% binomial interval around 0.996 (computed from the normal
        // approximation: 0.996 +/- 2.576 * sqrt(0.996*0.004/100) = +/- 0.0163).
        let labels: Vec<u8> = (0..1000).map(|i| u8::from(i >= 4)).collect();
        let features: Vec<f64> = (0..2000).map(|i| (i % 13) as f64).collect();
        let ds = test_dataset(features, 2, labels);
        let sampled = sample_uniform(&ds, 100, 42).unwrap();
        let frac = sampled.n_attack() as f64 / 100.0;
        assert!((frac - 0.996).abs() <= 0.0163 + 1e-12, "fraction {frac}");
    }

    #[test]
    fn label_validation_rejects_out_of_range() {
        let err = FlowDataset::new(
            vec![0.0, 0.0],
            2,
            vec![2],
            FlowSchema::default(),
            Provenance::default(),
        );
        assert!(matches!(err, Err(Error::InvalidLabel { .. })));
    }

    proptest! {
        #[test]
        fn splits_partition_all_rows(n in 3usize..200, seed in 0u64..1000) {
            let ds = labeled(n, 3);
            let (train, test) = split_train_test(&ds, 0.2, seed).unwrap();
            prop_assert_eq!(train.n_rows() + test.n_rows(), n);
            if train.n_rows() >= 2 {
                let (tr, val) = split_train_val(&train, 0.1, seed).unwrap();
                prop_assert_eq!(tr.n_rows() + val.n_rows() + test.n_rows(), n);
            }
        }

        #[test]
        fn partition_sides_sum_to_whole(labels in proptest::collection::vec(0u8..2, 1..100)) {
            let n = labels.len();
            let features = vec![0.5; n * 2];
            let ds = test_dataset(features, 2, labels);
            let (b, a) = partition_validation_by_label(&ds);
            prop_assert_eq!(b.n_rows() + a.n_rows(), n);
        }
    }
}
