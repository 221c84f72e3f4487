//! Server-side aggregation strategies: FedAvg, FedAvgM and the adaptive
//! FedOpt family (FedAdagrad, FedAdam, FedYogi).
//!
//! FedAvgM uses the descent form with pseudo-gradient
//! `delta = global - fedavg(updates)`; the FedOpt family uses the ascent form
//! with `delta = fedavg(updates) - global`. Both reduce to plain FedAvg in
//! their degenerate settings (beta = 0, eta = 1 for FedAvgM; the tests pin
//! the reductions).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autoencoder::AeParams;
use crate::error::{Error, Result};

/// Aggregation strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    FedAvg,
    FedAvgM,
    FedAdagrad,
    FedYogi,
    FedAdam,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::FedAvg,
        Strategy::FedAvgM,
        Strategy::FedAdagrad,
        Strategy::FedYogi,
        Strategy::FedAdam,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::FedAvg => "fedavg",
            Strategy::FedAvgM => "fedavgm",
            Strategy::FedAdagrad => "fedadagrad",
            Strategy::FedYogi => "fedyogi",
            Strategy::FedAdam => "fedadam",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fedavg" => Ok(Strategy::FedAvg),
            "fedavgm" => Ok(Strategy::FedAvgM),
            "fedadagrad" => Ok(Strategy::FedAdagrad),
            "fedyogi" => Ok(Strategy::FedYogi),
            "fedadam" => Ok(Strategy::FedAdam),
            other => Err(Error::InvalidParameter {
                name: "strategy",
                reason: format!("unknown strategy `{other}`"),
            }),
        }
    }
}

/// Adaptive variant inside the FedOpt family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FedOptVariant {
    Adagrad,
    Adam,
    Yogi,
}

/// Server-side constants. `eta`/`momentum` drive FedAvgM; `eta`, `beta1`,
/// `beta2` and `tau` drive the FedOpt family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub eta: f64,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub tau: f64,
}

impl StrategyConfig {
    /// The common framework defaults: FedAvgM eta 1.0 / momentum 0.9; FedOpt
    /// eta 0.1, beta1 0.9, beta2 0.99, tau 1e-9.
    pub fn defaults_for(strategy: Strategy) -> Self {
        let eta = match strategy {
            Strategy::FedAvg | Strategy::FedAvgM => 1.0,
            _ => 0.1,
        };
        Self {
            eta,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.99,
            tau: 1e-9,
        }
    }
}

/// One client's contribution to a round: the trained flat parameter vector
/// weighted by its local training-set size.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub params: Vec<f64>,
    pub n_samples: usize,
}

fn check_updates(updates: &[ClientUpdate], expected_len: Option<usize>) -> Result<usize> {
    let first = updates.first().ok_or(Error::InvalidParameter {
        name: "updates",
        reason: "no client updates to aggregate".into(),
    })?;
    let len = expected_len.unwrap_or(first.params.len());
    for u in updates {
        if u.params.len() != len {
            return Err(Error::LengthMismatch {
                left: u.params.len(),
                right: len,
            });
        }
        if u.n_samples == 0 {
            return Err(Error::InvalidParameter {
                name: "n_samples",
                reason: "zero-sample client update".into(),
            });
        }
    }
    Ok(len)
}

/// Coordinate-wise sample-size-weighted mean of the client vectors.
///
/// Computed relative to the first update (`x0 + sum_k w_k (x_k - x0)`), which
/// is algebraically the weighted mean but returns k identical vectors bit for
/// bit unchanged.
pub fn aggregate_fedavg(updates: &[ClientUpdate]) -> Result<Vec<f64>> {
    check_updates(updates, None)?;
    let total: f64 = updates.iter().map(|u| u.n_samples as f64).sum();
    let base = &updates[0].params;
    let mut out = base.clone();
    for u in &updates[1..] {
        let w = u.n_samples as f64 / total;
        for (o, (&p, &b)) in out.iter_mut().zip(u.params.iter().zip(base)) {
            *o += w * (p - b);
        }
    }
    Ok(out)
}

/// FedAvgM: momentum over the pseudo-gradient `global - fedavg(updates)`,
/// applied as a descent step.
pub fn aggregate_fedavgm(
    global: &[f64],
    velocity: &mut [f64],
    cfg: &StrategyConfig,
    updates: &[ClientUpdate],
) -> Result<Vec<f64>> {
    check_updates(updates, Some(global.len()))?;
    let avg = aggregate_fedavg(updates)?;
    let mut out = Vec::with_capacity(global.len());
    for k in 0..global.len() {
        let delta = global[k] - avg[k];
        velocity[k] = cfg.momentum * velocity[k] + delta;
        out.push(global[k] - cfg.eta * velocity[k]);
    }
    Ok(out)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// FedOpt family: server Adam/Adagrad/Yogi over the pseudo-gradient
/// `fedavg(updates) - global`. `m` starts at zero and `v` at tau^2.
pub fn aggregate_fedopt(
    variant: FedOptVariant,
    global: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &StrategyConfig,
    updates: &[ClientUpdate],
) -> Result<Vec<f64>> {
    check_updates(updates, Some(global.len()))?;
    let avg = aggregate_fedavg(updates)?;
    let mut out = Vec::with_capacity(global.len());
    for k in 0..global.len() {
        let delta = avg[k] - global[k];
        let d2 = delta * delta;
        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * delta;
        v[k] = match variant {
            FedOptVariant::Adagrad => v[k] + d2,
            FedOptVariant::Adam => cfg.beta2 * v[k] + (1.0 - cfg.beta2) * d2,
            FedOptVariant::Yogi => v[k] - (1.0 - cfg.beta2) * d2 * sign(v[k] - d2),
        };
        out.push(global[k] + cfg.eta * m[k] / (v[k].sqrt() + cfg.tau));
    }
    Ok(out)
}

/// Global model plus the per-strategy optimizer state.
#[derive(Debug, Clone)]
pub struct ServerState {
    global: AeParams,
    pub strategy: Strategy,
    pub config: StrategyConfig,
    velocity: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    round: usize,
}

impl ServerState {
    pub fn new(global: AeParams, strategy: Strategy, config: StrategyConfig) -> Self {
        let len = global.flat().len();
        Self {
            global,
            strategy,
            config,
            velocity: vec![0.0; len],
            m: vec![0.0; len],
            v: vec![config.tau * config.tau; len],
            round: 0,
        }
    }

    pub fn global(&self) -> &AeParams {
        &self.global
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Applies one round of aggregation to the global model.
    pub fn aggregate(&mut self, updates: &[ClientUpdate]) -> Result<()> {
        let new_flat = match self.strategy {
            Strategy::FedAvg => {
                check_updates(updates, Some(self.global.flat().len()))?;
                aggregate_fedavg(updates)?
            }
            Strategy::FedAvgM => aggregate_fedavgm(
                self.global.flat(),
                &mut self.velocity,
                &self.config,
                updates,
            )?,
            Strategy::FedAdagrad => aggregate_fedopt(
                FedOptVariant::Adagrad,
                self.global.flat(),
                &mut self.m,
                &mut self.v,
                &self.config,
                updates,
            )?,
            Strategy::FedAdam => aggregate_fedopt(
                FedOptVariant::Adam,
                self.global.flat(),
                &mut self.m,
                &mut self.v,
                &self.config,
                updates,
            )?,
            Strategy::FedYogi => aggregate_fedopt(
                FedOptVariant::Yogi,
                self.global.flat(),
                &mut self.m,
                &mut self.v,
                &self.config,
                updates,
            )?,
        };
        self.global = self.global.set_parameters(new_flat)?;
        self.round += 1;
        Ok(())
    }
}
