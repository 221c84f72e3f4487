//! Mini-batch Adam training with deterministic per-epoch reshuffling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{loss_and_gradient, AeParams};
use crate::dataset::FlowDataset;
use crate::error::{Error, Result};

/// Local training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 128,
            epochs: 10,
            seed,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

/// First/second-moment vectors and the step counter for Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update applied in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        assert_eq!(params.len(), self.m.len(), "adam state length mismatch");
        assert_eq!(params.len(), grad.len(), "gradient length mismatch");
        self.t += 1;
        let bias1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bias2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            self.m[k] = cfg.beta1 * self.m[k] + (1.0 - cfg.beta1) * grad[k];
            self.v[k] = cfg.beta2 * self.v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
            let m_hat = self.m[k] / bias1;
            let v_hat = self.v[k] / bias2;
            params[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Trains for `cfg.epochs` epochs of shuffled mini-batches (the final partial
/// batch included) and returns the updated parameters plus the mean
/// reconstruction loss per epoch.
///
/// The epoch-`e` batch order comes from `seed + e`, so a training run is a
/// pure function of (data, config).
pub fn train_epochs(
    params: &AeParams,
    train: &FlowDataset,
    cfg: &TrainConfig,
) -> Result<(AeParams, Vec<f64>)> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.n_features() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            got: train.n_features(),
        });
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidParameter {
            name: "batch_size",
            reason: "zero".into(),
        });
    }
    if cfg.epochs == 0 {
        return Err(Error::InvalidParameter {
            name: "epochs",
            reason: "zero".into(),
        });
    }

    let n = train.n_rows();
    let width = train.n_features();
    let mut flat = params.flat().to_vec();
    let mut adam = AdamState::new(flat.len());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch_buf: Vec<f64> = Vec::with_capacity(cfg.batch_size * width);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(
            cfg.seed.wrapping_add(epoch as u64),
        ));

        let mut weighted_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch_buf.clear();
            for &i in chunk {
                batch_buf.extend_from_slice(train.row(i));
            }
            let (loss, grad) = loss_and_gradient(params.manifest(), &flat, &batch_buf, width);
            adam.step(&mut flat, &grad, cfg);
            weighted_loss += loss * chunk.len() as f64;
        }
        history.push(weighted_loss / n as f64);
    }

    Ok((params.set_parameters(flat)?, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{init_params, AeArchitecture};
    use crate::dataset::test_dataset;

    fn easy_dataset(rows: usize) -> FlowDataset {
        // two tight clusters, comfortably reconstructable
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..rows {
            let base = if i % 2 == 0 { 0.25 } else { 0.75 };
            features.extend_from_slice(&[base, base + 0.05, base - 0.05]);
            labels.push(0);
        }
        test_dataset(features, 3, labels)
    }

    #[test]
    fn adam_single_step_matches_closed_form() {
        let cfg = TrainConfig::with_seed(0);
        let mut adam = AdamState::new(1);
        let mut p = [1.0f64];
        adam.step(&mut p, &[1.0], &cfg);
        // m_hat = 1, v_hat = 1 after bias correction; step = lr / (1 + eps)
        let expected = 1.0 - 0.001 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-12, "got {}", p[0]);
    }

    #[test]
    fn zero_learning_rate_leaves_params_unchanged() {
        let params = init_params(&AeArchitecture::new(3).unwrap(), 4);
        let mut cfg = TrainConfig::with_seed(1);
        cfg.learning_rate = 0.0;
        cfg.epochs = 2;
        let (trained, _) = train_epochs(&params, &easy_dataset(50), &cfg).unwrap();
        assert_eq!(trained.flat(), params.flat());
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let params = init_params(&AeArchitecture::new(3).unwrap(), 4);
        let mut cfg = TrainConfig::with_seed(9);
        cfg.epochs = 3;
        cfg.batch_size = 16;
        let ds = easy_dataset(100);
        let (a, ha) = train_epochs(&params, &ds, &cfg).unwrap();
        let (b, hb) = train_epochs(&params, &ds, &cfg).unwrap();
        assert_eq!(a.flat(), b.flat());
        assert_eq!(ha, hb);
    }

    #[test]
    fn loss_history_trends_down_on_easy_data() {
        let params = init_params(&AeArchitecture::new(3).unwrap(), 11);
        let mut cfg = TrainConfig::with_seed(5);
        cfg.epochs = 10;
        cfg.batch_size = 32;
        let ds = easy_dataset(400);
        let (_, history) = train_epochs(&params, &ds, &cfg).unwrap();
        assert_eq!(history.len(), 10);
        for pair in history.windows(2) {
            assert!(
                pair[1] <= pair[0] * 1.10,
                "epoch loss rose beyond tolerance: {pair:?}"
            );
        }
        assert!(history.last().unwrap() < history.first().unwrap());
    }

    #[test]
    fn partial_final_batch_is_trained() {
        // 10 rows with batch 128: one partial batch, still updates params
        let params = init_params(&AeArchitecture::new(3).unwrap(), 2);
        let mut cfg = TrainConfig::with_seed(3);
        cfg.epochs = 1;
        let (trained, _) = train_epochs(&params, &easy_dataset(10), &cfg).unwrap();
        assert_ne!(trained.flat(), params.flat());
    }

    #[test]
    fn rejects_empty_dataset() {
        let params = init_params(&AeArchitecture::new(3).unwrap(), 2);
        let empty = test_dataset(vec![], 3, vec![]);
        assert!(matches!(
            train_epochs(&params, &empty, &TrainConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }
}
