//! Cross-silo federated simulation in one process: broadcast the global
//! parameters, train every participating client locally, aggregate, then have
//! each client recompute its thresholds from the new global model and
//! evaluate its own test set.

mod strategy;

pub use strategy::{
    aggregate_fedavg, aggregate_fedavgm, aggregate_fedopt, ClientUpdate, FedOptVariant,
    ServerState, Strategy, StrategyConfig,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autoencoder::{to_wire_bytes, train_epochs, AeParams, TrainConfig};
use crate::dataset::{partition_validation_by_label, SplitBundle};
use crate::detector::{classify_all, compute_thresholds, score_dataset, DetectionMode, ThresholdPair};
use crate::efc::EfcModel;
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, confusion, roc_auc, MetricsReport};

/// One federated participant: its stacked splits, the EFC fit on its own
/// training data (when stacking is on), local parameters and training setup.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub name: String,
    pub bundle: SplitBundle,
    pub efc: Option<EfcModel>,
    pub params: AeParams,
    pub train_config: TrainConfig,
    pub mode: DetectionMode,
}

/// Round schedule. With `warmup_rounds = 0` every client participates from
/// round 1; otherwise the first rounds run on a growing prefix of the client
/// list, mimicking silos that come online late.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub rounds: usize,
    pub warmup_rounds: usize,
}

impl SimulationConfig {
    pub fn new(rounds: usize) -> Self {
        Self {
            rounds,
            warmup_rounds: 0,
        }
    }
}

/// Per-client slice of a round report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRoundReport {
    pub client: String,
    pub thresholds: ThresholdPair,
    pub metrics: MetricsReport,
}

/// Unweighted means over the participating clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundAverages {
    pub f1: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub missrate_paper: f64,
    pub fallout: f64,
    pub auc: f64,
}

impl RoundAverages {
    fn from_reports(reports: &[ClientRoundReport]) -> Self {
        let n = reports.len().max(1) as f64;
        let mean = |f: fn(&MetricsReport) -> f64| {
            reports.iter().map(|r| f(&r.metrics)).sum::<f64>() / n
        };
        Self {
            f1: mean(|m| m.f1),
            accuracy: mean(|m| m.accuracy),
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            missrate_paper: mean(|m| m.missrate_paper),
            fallout: mean(|m| m.fallout),
            auc: mean(|m| m.auc),
        }
    }
}

/// Everything recorded about one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub strategy: String,
    /// Which parameters the thresholds and evaluation used.
    pub evaluated_with: String,
    /// SHA-256 of the aggregated global model in wire format.
    pub global_digest: String,
    pub clients: Vec<ClientRoundReport>,
    pub averages: RoundAverages,
}

/// Evaluation uses the post-aggregation global model of the same round.
pub const EVALUATED_WITH: &str = "global-post-aggregation";

/// Mixes the client seed with the round index so every round reshuffles
/// differently but reproducibly.
pub fn train_seed_for_round(seed: u64, round: usize) -> u64 {
    seed ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Hex SHA-256 of the wire encoding of a parameter set.
pub fn parameter_digest(params: &AeParams) -> String {
    let digest = Sha256::digest(to_wire_bytes(params));
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        use std::fmt::Write;
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Loads the broadcast parameters, trains locally and returns the update
/// weighted by the training-set size. The client keeps its trained
/// parameters.
pub fn client_fit(global: &[f64], client: &mut ClientState, round: usize) -> Result<ClientUpdate> {
    if global.len() != client.params.flat().len() {
        return Err(Error::ManifestMismatch {
            client: client.name.clone(),
        });
    }
    let start = client.params.set_parameters(global.to_vec())?;
    let cfg = TrainConfig {
        seed: train_seed_for_round(client.train_config.seed, round),
        ..client.train_config
    };
    let (trained, _history) = train_epochs(&start, &client.bundle.train, &cfg)?;
    let update = ClientUpdate {
        params: trained.get_parameters(),
        n_samples: client.bundle.train.n_rows(),
    };
    client.params = trained;
    Ok(update)
}

/// Recomputes the client's thresholds from the given (post-aggregation)
/// parameters and its local validation subsets, then scores its test set.
pub fn client_evaluate(
    global: &AeParams,
    client: &ClientState,
    round: usize,
) -> Result<ClientRoundReport> {
    let (benign_val, attack_val) = partition_validation_by_label(&client.bundle.validation);
    let attack = match client.mode {
        DetectionMode::DualThreshold => Some(&attack_val),
        DetectionMode::BenignOnly => None,
    };
    let thresholds = compute_thresholds(global, &benign_val, attack, &client.name, round)?;
    let scores = score_dataset(global, &client.bundle.test)?;
    let predicted = classify_all(&scores, &thresholds, client.mode)?;
    let cm = confusion(client.bundle.test.labels(), &predicted)?;
    let auc = roc_auc(&scores, client.bundle.test.labels()).ok();
    Ok(ClientRoundReport {
        client: client.name.clone(),
        thresholds,
        metrics: compute_metrics(&cm).with_auc(auc),
    })
}

fn participants_for_round(round: usize, n_clients: usize, warmup_rounds: usize) -> Vec<usize> {
    if round > warmup_rounds {
        return (0..n_clients).collect();
    }
    let count = (n_clients * round).div_ceil(warmup_rounds + 1).max(1);
    (0..count.min(n_clients)).collect()
}

/// Runs the full simulation and returns one report per round.
pub fn run_simulation(
    clients: &mut [ClientState],
    server: &mut ServerState,
    sim: &SimulationConfig,
) -> Result<Vec<RoundReport>> {
    if clients.is_empty() {
        return Err(Error::InvalidParameter {
            name: "clients",
            reason: "no clients".into(),
        });
    }
    if sim.rounds == 0 {
        return Err(Error::InvalidParameter {
            name: "rounds",
            reason: "need at least one round".into(),
        });
    }
    for client in clients.iter() {
        if client.params.manifest() != server.global().manifest() {
            return Err(Error::ManifestMismatch {
                client: client.name.clone(),
            });
        }
    }

    let mut reports = Vec::with_capacity(sim.rounds);
    for round in 1..=sim.rounds {
        let participating = participants_for_round(round, clients.len(), sim.warmup_rounds);

        let mut updates = Vec::with_capacity(participating.len());
        let broadcast = server.global().get_parameters();
        for &idx in &participating {
            updates.push(client_fit(&broadcast, &mut clients[idx], round)?);
        }

        server.aggregate(&updates)?;
        let global_digest = parameter_digest(server.global());

        let mut client_reports = Vec::with_capacity(participating.len());
        for &idx in &participating {
            client_reports.push(client_evaluate(server.global(), &clients[idx], round)?);
        }
        let averages = RoundAverages::from_reports(&client_reports);
        reports.push(RoundReport {
            round,
            strategy: server.strategy.to_string(),
            evaluated_with: EVALUATED_WITH.to_string(),
            global_digest,
            clients: client_reports,
            averages,
        });
    }
    Ok(reports)
}
