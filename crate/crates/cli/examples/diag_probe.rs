// temp probe: per-round threshold geometry and per-silo f1 for fed runs
use fednids_cli::config::{ExperimentConfig, SiloSource};
use fednids_cli::experiment::run_federated;
use fednids_core::dataset::{ClusterSpec, SyntheticSiloSpec};
use fednids_core::detector::DetectionMode;
use fednids_core::efc::EfcConfig;
use fednids_core::fedcore::Strategy;

fn silo(name: &str, n: usize, benign_fraction: f64, benign_means: Vec<f64>, seed: u64) -> SiloSource {
    let n_features = benign_means.len();
    SiloSource {
        name: name.into(), csv: None, schema: None, cache: None,
        synthetic: Some(SyntheticSiloSpec {
            name: name.into(), n_samples: n, benign_fraction, n_features,
            benign: ClusterSpec { means: benign_means.clone(), spreads: vec![0.12; n_features], correlation: 0.9, factor_signs: None },
            attack: ClusterSpec {
                means: benign_means.iter().enumerate().map(|(j, &m)| if j % 2 == 0 { m + 0.18 } else { m - 0.18 }).collect(),
                spreads: vec![0.18; n_features], correlation: 0.0, factor_signs: None },
            seed,
        }),
    }
}

fn config(stacking: bool) -> ExperimentConfig {
    let silos = vec![
        silo("bot", 30000, 0.004, vec![0.40, 0.55, 0.38, 0.60, 0.43, 0.52, 0.46, 0.58], 101),
        silo("ton", 12000, 0.36,  vec![0.55, 0.40, 0.62, 0.45, 0.58, 0.40, 0.60, 0.43], 102),
        silo("unsw", 12000, 0.96, vec![0.45, 0.60, 0.50, 0.38, 0.62, 0.46, 0.40, 0.55], 103),
        silo("cic", 12000, 0.88,  vec![0.60, 0.48, 0.43, 0.55, 0.38, 0.60, 0.52, 0.40], 104),
    ];
    let mut cfg: ExperimentConfig = toml::from_str("rounds = 10\nseed = 42\n[[silos]]\nname = \"x\"\ncache = \"x\"").unwrap();
    cfg.silos = silos;
    cfg.efc = EfcConfig { q_bins: 6, alpha: 0.5, quantile: 0.95, ridge: 1e-6 };
    cfg.detection_mode = DetectionMode::DualThreshold;
    cfg.stacking = stacking;
    cfg.strategy = Strategy::FedAvg;
    cfg
}

fn main() {
    for stacking in [true, false] {
        println!("=== stacking {stacking} ===");
        let fed = run_federated(&config(stacking)).unwrap();
        for r in &fed.rounds {
            print!("round {:>2}:", r.round);
            for c in &r.clients {
                print!(
                    "  {}[f1 {:.3} tb {:.4} ta {:.4} gap {:+.4}]",
                    c.client,
                    c.metrics.f1,
                    c.thresholds.t_benign,
                    c.thresholds.t_attack.unwrap_or(f64::NAN),
                    c.thresholds.t_attack.unwrap_or(f64::NAN) - c.thresholds.t_benign,
                );
            }
            println!();
        }
    }
}
