//! Energy Flow Classifier: the first stage of the stack. Fit on benign
//! training flows only, it scores flows by inverse-Potts energy and its
//! binary verdict is appended to the feature matrix for the autoencoder.

mod discretize;
mod model;
mod persist;

pub use discretize::{fit_discretizer, Discretizer};
pub use model::{energy, fit_efc, predict, EfcModel};
pub use persist::{load_efc, save_efc};

use serde::{Deserialize, Serialize};

use crate::dataset::FlowDataset;
use crate::error::{Error, Result};

/// Name of the appended prediction column.
pub const STACKED_COLUMN: &str = "efc_prediction";

/// Inference constants. The defaults hold at desk scale; heavily skewed or
/// tiny silos usually want fewer bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfcConfig {
    /// Requested bins per feature.
    pub q_bins: usize,
    /// Pseudocount blend weight in (0, 1).
    pub alpha: f64,
    /// Training-energy quantile that places the cutoff.
    pub quantile: f64,
    /// Ridge added to the covariance diagonal before inversion.
    pub ridge: f64,
}

impl Default for EfcConfig {
    fn default() -> Self {
        Self {
            q_bins: 30,
            alpha: 0.5,
            quantile: 0.95,
            ridge: 1e-6,
        }
    }
}

/// Appends the EFC prediction as a last column named
/// [`STACKED_COLUMN`], valued 0.0/1.0. Stacking twice is an error.
pub fn stack_feature(ds: &FlowDataset, preds: &[u8]) -> Result<FlowDataset> {
    if preds.len() != ds.n_rows() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: ds.n_rows(),
        });
    }
    if ds
        .schema
        .feature_names
        .iter()
        .any(|n| n == STACKED_COLUMN)
    {
        return Err(Error::AlreadyStacked(STACKED_COLUMN.to_string()));
    }
    let m = ds.n_features();
    let mut features = Vec::with_capacity(ds.n_rows() * (m + 1));
    for (row, &p) in ds.rows().zip(preds) {
        features.extend_from_slice(row);
        features.push(f64::from(p));
    }
    let mut schema = ds.schema.clone();
    schema.feature_names.push(STACKED_COLUMN.to_string());
    FlowDataset::new(
        features,
        m + 1,
        ds.labels().to_vec(),
        schema,
        ds.provenance.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_dataset;

    #[test]
    fn stacking_appends_the_prediction_column() {
        let ds = test_dataset(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 2, vec![0, 1, 0]);
        let stacked = stack_feature(&ds, &[0, 1, 0]).unwrap();
        assert_eq!(stacked.n_features(), 3);
        assert_eq!(stacked.row(0), &[0.1, 0.2, 0.0]);
        assert_eq!(stacked.row(1), &[0.3, 0.4, 1.0]);
        assert_eq!(
            stacked.schema.feature_names.last().unwrap(),
            STACKED_COLUMN
        );
        // appended values are already inside [0, 1]
        assert!(stacked.features().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn stacking_twice_is_rejected() {
        let ds = test_dataset(vec![0.1, 0.2], 2, vec![0]);
        let once = stack_feature(&ds, &[1]).unwrap();
        assert!(matches!(
            stack_feature(&once, &[1]),
            Err(Error::AlreadyStacked(_))
        ));
    }

    #[test]
    fn stacking_checks_lengths() {
        let ds = test_dataset(vec![0.1, 0.2], 2, vec![0]);
        assert!(matches!(
            stack_feature(&ds, &[0, 1]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
