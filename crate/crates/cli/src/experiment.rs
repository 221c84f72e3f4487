//! The three evaluation modes: local (train and test on the same silo),
//! naive cross-silo (train on one silo, test on the others), and federated
//! (the full simulation).
//!
//! Local and cross baselines without stacking threshold at the 0.95 quantile
//! of the validation reconstruction losses; everything else uses the
//! benign/attack validation-mean thresholds of the configured detection mode.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fednids_core::autoencoder::{init_params, AeArchitecture, AeParams, TrainConfig};
use fednids_core::dataset::{partition_validation_by_label, FlowDataset};
use fednids_core::detector::{
    classify_all, compute_thresholds, quantile_threshold, score_dataset, DetectionMode,
    ThresholdPair,
};
use fednids_core::efc::{predict, stack_feature};
use fednids_core::fedcore::{
    client_fit, run_simulation, ClientState, RoundReport, ServerState, SimulationConfig,
};
use fednids_core::metrics::{compute_metrics, confusion, roc_auc, MetricsReport};

use crate::config::ExperimentConfig;
use crate::pipeline::{prepare_silo, PreparedSilo};

/// Validation-loss quantile for the plain-autoencoder baseline threshold.
pub const BASELINE_QUANTILE: f64 = 0.95;

/// One test sample the classifier got wrong.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub row: usize,
    pub loss: f64,
    pub predicted: u8,
    pub actual: u8,
}

/// Evaluation of one model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiloEvaluation {
    pub silo: String,
    pub thresholds: ThresholdPair,
    pub metrics: MetricsReport,
    #[serde(skip)]
    pub misclassified: Vec<SampleRecord>,
}

/// Result of `run-local`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalRun {
    pub silos: Vec<SiloEvaluation>,
    pub average_f1: f64,
}

/// One off-diagonal cell of the cross-evaluation matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossCell {
    pub train_silo: String,
    pub eval_silo: String,
    pub metrics: MetricsReport,
}

/// Result of `run-cross`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossRun {
    pub cells: Vec<CrossCell>,
    pub average_f1: f64,
}

/// Result of `run-fed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FedRun {
    pub rounds: Vec<RoundReport>,
    /// Final-round evaluation, recomputed to carry per-sample records.
    pub final_silos: Vec<SiloEvaluation>,
}

impl FedRun {
    pub fn final_average_f1(&self) -> f64 {
        self.rounds.last().map(|r| r.averages.f1).unwrap_or(0.0)
    }
}

fn prep_seed(seed: u64, silo_index: usize) -> u64 {
    seed.wrapping_add(1000 + silo_index as u64)
}

fn client_train_seed(seed: u64, silo_index: usize) -> u64 {
    seed.wrapping_add(2000 + silo_index as u64)
}

/// How an evaluation derives its decision thresholds.
#[derive(Debug, Clone, Copy)]
enum ThresholdPolicy {
    /// Benign/attack validation means under the configured mode.
    Mode(DetectionMode),
    /// Baseline: quantile of all validation losses, benign-only rule.
    Quantile(f64),
}

impl ThresholdPolicy {
    fn decision_mode(&self) -> DetectionMode {
        match self {
            ThresholdPolicy::Mode(m) => *m,
            ThresholdPolicy::Quantile(_) => DetectionMode::BenignOnly,
        }
    }
}

fn thresholds_for(
    params: &AeParams,
    validation: &FlowDataset,
    policy: ThresholdPolicy,
    silo: &str,
    round: usize,
) -> Result<ThresholdPair> {
    match policy {
        ThresholdPolicy::Mode(mode) => {
            let (benign, attack) = partition_validation_by_label(validation);
            let attack_arg = match mode {
                DetectionMode::DualThreshold => Some(&attack),
                DetectionMode::BenignOnly => None,
            };
            compute_thresholds(params, &benign, attack_arg, silo, round)
                .with_context(|| format!("thresholds for silo `{silo}`"))
        }
        ThresholdPolicy::Quantile(q) => Ok(quantile_threshold(params, validation, q, silo, round)?),
    }
}

fn evaluate(
    params: &AeParams,
    validation: &FlowDataset,
    test: &FlowDataset,
    policy: ThresholdPolicy,
    silo: &str,
    round: usize,
) -> Result<SiloEvaluation> {
    let thresholds = thresholds_for(params, validation, policy, silo, round)?;
    let mode = policy.decision_mode();
    let scores = score_dataset(params, test)?;
    let predicted = classify_all(&scores, &thresholds, mode)?;
    let cm = confusion(test.labels(), &predicted)?;
    let auc = roc_auc(&scores, test.labels()).ok();
    let misclassified = scores
        .iter()
        .zip(&predicted)
        .zip(test.labels())
        .enumerate()
        .filter(|(_, ((_, &p), &a))| p != a)
        .map(|(row, ((&loss, &p), &a))| SampleRecord {
            row,
            loss,
            predicted: p,
            actual: a,
        })
        .collect();
    Ok(SiloEvaluation {
        silo: silo.to_string(),
        thresholds,
        metrics: compute_metrics(&cm).with_auc(auc),
        misclassified,
    })
}

fn local_policy(cfg: &ExperimentConfig) -> ThresholdPolicy {
    if cfg.stacking {
        ThresholdPolicy::Mode(cfg.detection_mode)
    } else {
        ThresholdPolicy::Quantile(BASELINE_QUANTILE)
    }
}

/// Prepares every silo with the pipeline switches of the config.
fn prepare_all(cfg: &ExperimentConfig) -> Result<Vec<PreparedSilo>> {
    let raw = cfg.load_silos()?;
    raw.iter()
        .enumerate()
        .map(|(i, ds)| prepare_silo(ds, cfg.stacking, &cfg.efc, prep_seed(cfg.seed, i)))
        .collect()
}

fn check_homogeneous(prepared: &[PreparedSilo]) -> Result<usize> {
    let dim = prepared[0].bundle.train.n_features();
    for p in prepared {
        if p.bundle.train.n_features() != dim {
            bail!(
                "silo `{}` has {} features, expected {dim}; horizontal FL needs one feature set",
                p.name,
                p.bundle.train.n_features()
            );
        }
    }
    Ok(dim)
}

fn build_client(prepared: PreparedSilo, cfg: &ExperimentConfig, index: usize, init: &AeParams) -> ClientState {
    ClientState {
        name: prepared.name.clone(),
        bundle: prepared.bundle,
        efc: prepared.efc,
        params: init.clone(),
        train_config: TrainConfig {
            seed: client_train_seed(cfg.seed, index),
            ..cfg.training
        },
        mode: cfg.detection_mode,
    }
}

/// Trains one silo's model locally (a single 10-epoch run from the shared
/// initialization, identical to round 1 of a federated fit).
fn train_local(
    prepared: PreparedSilo,
    cfg: &ExperimentConfig,
    index: usize,
    init: &AeParams,
) -> Result<(ClientState, AeParams)> {
    let mut client = build_client(prepared, cfg, index, init);
    client_fit(&init.get_parameters(), &mut client, 1)
        .with_context(|| format!("training on silo `{}`", client.name))?;
    let params = client.params.clone();
    Ok((client, params))
}

/// Per-silo local pipeline: fit, stack, train, threshold and evaluate the
/// silo's own test set.
pub fn run_local(cfg: &ExperimentConfig) -> Result<LocalRun> {
    let prepared = prepare_all(cfg)?;
    let dim = check_homogeneous(&prepared)?;
    let init = init_params(&AeArchitecture::new(dim)?, cfg.seed);
    let policy = local_policy(cfg);

    let mut silos = Vec::with_capacity(prepared.len());
    for (i, p) in prepared.into_iter().enumerate() {
        let (client, params) = train_local(p, cfg, i, &init)?;
        silos.push(evaluate(
            &params,
            &client.bundle.validation,
            &client.bundle.test,
            policy,
            &client.name,
            1,
        )?);
    }
    let average_f1 = silos.iter().map(|s| s.metrics.f1).sum::<f64>() / silos.len() as f64;
    Ok(LocalRun { silos, average_f1 })
}

/// Trains per silo, then evaluates every model on every other silo's test
/// set. A foreign test set is stacked with the training silo's EFC: an
/// operator deploying the pipeline owns nothing else.
pub fn run_cross(cfg: &ExperimentConfig) -> Result<CrossRun> {
    if cfg.silos.len() < 2 {
        bail!("cross evaluation needs at least two silos");
    }
    let prepared = prepare_all(cfg)?;
    check_homogeneous(&prepared)?;
    let dim = prepared[0].bundle.train.n_features();
    let init = init_params(&AeArchitecture::new(dim)?, cfg.seed);
    let policy = local_policy(cfg);

    // train every silo and keep its deployable pieces
    let mut trained = Vec::with_capacity(prepared.len());
    for (i, p) in prepared.iter().enumerate() {
        let (client, params) = train_local(p.clone(), cfg, i, &init)?;
        trained.push((client, params));
    }

    let mut cells = Vec::new();
    for (i, (train_client, params)) in trained.iter().enumerate() {
        // thresholds travel with the trained pipeline
        let thresholds = thresholds_for(
            params,
            &train_client.bundle.validation,
            policy,
            &train_client.name,
            1,
        )?;
        for (j, target) in prepared.iter().enumerate() {
            if i == j {
                continue;
            }
            let foreign_test = match &train_client.efc {
                Some(efc) => {
                    let preds = predict(efc, &target.test_unstacked)?;
                    stack_feature(&target.test_unstacked, &preds)?
                }
                None => target.bundle.test.clone(),
            };
            let scores = score_dataset(params, &foreign_test)?;
            let predicted = classify_all(&scores, &thresholds, policy.decision_mode())?;
            let cm = confusion(foreign_test.labels(), &predicted)?;
            let auc = roc_auc(&scores, foreign_test.labels()).ok();
            cells.push(CrossCell {
                train_silo: train_client.name.clone(),
                eval_silo: target.name.clone(),
                metrics: compute_metrics(&cm).with_auc(auc),
            });
        }
    }
    let average_f1 = cells.iter().map(|c| c.metrics.f1).sum::<f64>() / cells.len() as f64;
    Ok(CrossRun { cells, average_f1 })
}

/// Full federated simulation over the configured silos and strategy.
pub fn run_federated(cfg: &ExperimentConfig) -> Result<FedRun> {
    let prepared = prepare_all(cfg)?;
    let dim = check_homogeneous(&prepared)?;
    let init = init_params(&AeArchitecture::new(dim)?, cfg.seed);

    let mut clients: Vec<ClientState> = prepared
        .into_iter()
        .enumerate()
        .map(|(i, p)| build_client(p, cfg, i, &init))
        .collect();
    let mut server = ServerState::new(init, cfg.strategy, cfg.server_config());
    let sim = SimulationConfig {
        rounds: cfg.rounds,
        warmup_rounds: cfg.warmup_rounds,
    };
    let rounds = run_simulation(&mut clients, &mut server, &sim)?;

    // final-round per-sample records for the error-analysis export
    let mut final_silos = Vec::with_capacity(clients.len());
    for client in &clients {
        final_silos.push(evaluate(
            server.global(),
            &client.bundle.validation,
            &client.bundle.test,
            ThresholdPolicy::Mode(client.mode),
            &client.name,
            cfg.rounds,
        )?);
    }
    Ok(FedRun {
        rounds,
        final_silos,
    })
}
