//! Reconstruction-loss thresholds and the two decision rules: benign-only
//! (loss above the benign threshold is an attack) and dual-threshold (attack
//! when the loss is strictly closer to the attack threshold). Ties classify
//! benign in both modes.

use serde::{Deserialize, Serialize};

use crate::autoencoder::{forward, mae_per_sample, AeParams};
use crate::dataset::FlowDataset;
use crate::error::{Error, Result};
use crate::stats::{mean, nearest_rank_quantile};

/// Which decision rule a client runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    BenignOnly,
    DualThreshold,
}

impl DetectionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectionMode::BenignOnly => "benign-only",
            DetectionMode::DualThreshold => "dual-threshold",
        }
    }
}

impl std::fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DetectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "benign-only" | "benign" => Ok(DetectionMode::BenignOnly),
            "dual-threshold" | "dual" => Ok(DetectionMode::DualThreshold),
            other => Err(Error::InvalidParameter {
                name: "detection_mode",
                reason: format!("unknown mode `{other}`"),
            }),
        }
    }
}

/// Benign threshold plus the optional attack threshold, recomputed each round
/// from the client's validation subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub t_benign: f64,
    pub t_attack: Option<f64>,
    pub round: usize,
    pub client: String,
}

/// Per-row mean absolute reconstruction error of a dataset under the given
/// parameters; the anomaly score fed to both `classify` and the ROC.
pub fn score_dataset(params: &AeParams, ds: &FlowDataset) -> Result<Vec<f64>> {
    if ds.n_features() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            got: ds.n_features(),
        });
    }
    if ds.is_empty() {
        return Ok(Vec::new());
    }
    let reconstruction = forward(params, ds.features(), ds.n_features())?;
    Ok(mae_per_sample(
        ds.features(),
        &reconstruction,
        ds.n_features(),
    ))
}

/// Mean MAE over the benign validation rows (and the attack rows when given).
///
/// The pair is a pure function of (params, validation subsets); callers tag
/// it with the round and client it was computed for.
pub fn compute_thresholds(
    params: &AeParams,
    benign: &FlowDataset,
    attack: Option<&FlowDataset>,
    client: &str,
    round: usize,
) -> Result<ThresholdPair> {
    if benign.is_empty() {
        return Err(Error::EmptyBenignValidation);
    }
    let t_benign = mean(&score_dataset(params, benign)?);
    let t_attack = match attack {
        None => None,
        Some(ds) if ds.is_empty() => return Err(Error::EmptyAttackValidation),
        Some(ds) => Some(mean(&score_dataset(params, ds)?)),
    };
    if let Some(t_a) = t_attack {
        if t_a < t_benign {
            log::warn!(
                "client `{client}` round {round}: attack threshold {t_a:.6} below benign \
                 threshold {t_benign:.6}; attacks reconstruct better than benign traffic"
            );
        }
    }
    Ok(ThresholdPair {
        t_benign,
        t_attack,
        round,
        client: client.to_string(),
    })
}

/// Benign threshold for the plain-autoencoder baseline: the nearest-rank
/// quantile of the validation losses instead of their mean.
pub fn quantile_threshold(
    params: &AeParams,
    validation: &FlowDataset,
    q: f64,
    client: &str,
    round: usize,
) -> Result<ThresholdPair> {
    if validation.is_empty() {
        return Err(Error::EmptyBenignValidation);
    }
    let scores = score_dataset(params, validation)?;
    Ok(ThresholdPair {
        t_benign: nearest_rank_quantile(&scores, q),
        t_attack: None,
        round,
        client: client.to_string(),
    })
}

/// Applies the decision rule to one loss value. 1 means attack.
pub fn classify(loss: f64, thresholds: &ThresholdPair, mode: DetectionMode) -> Result<u8> {
    match mode {
        DetectionMode::BenignOnly => Ok(u8::from(loss > thresholds.t_benign)),
        DetectionMode::DualThreshold => {
            let t_attack = thresholds.t_attack.ok_or(Error::MissingAttackThreshold)?;
            let to_benign = (loss - thresholds.t_benign).abs();
            let to_attack = (loss - t_attack).abs();
            Ok(u8::from(to_benign > to_attack))
        }
    }
}

/// Classifies a whole score vector.
pub fn classify_all(scores: &[f64], thresholds: &ThresholdPair, mode: DetectionMode) -> Result<Vec<u8>> {
    scores.iter().map(|&s| classify(s, thresholds, mode)).collect()
}
