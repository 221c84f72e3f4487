// temp probe: tune the synthetic 4-silo setup against the e2e criteria
use fednids_cli::config::{ExperimentConfig, SiloSource};
use fednids_cli::experiment::{run_cross, run_federated, run_local};
use fednids_core::dataset::{ClusterSpec, SyntheticSiloSpec};
use fednids_core::detector::DetectionMode;
use fednids_core::efc::EfcConfig;
use fednids_core::fedcore::Strategy;

fn silo(name: &str, n: usize, benign_fraction: f64, benign_means: Vec<f64>, signs: Vec<f64>, seed: u64) -> SiloSource {
    let n_features = benign_means.len();
    // attacks break the factor structure: displaced orthogonally to the
    // shared-factor direction (alternating shifts) with a wider scatter
    let attack_means: Vec<f64> = benign_means.iter().enumerate()
        .map(|(j, &m)| if j % 2 == 0 { m + 0.22 } else { m - 0.22 })
        .collect();
    SiloSource {
        name: name.into(),
        csv: None, schema: None, cache: None,
        synthetic: Some(SyntheticSiloSpec {
            name: name.into(),
            n_samples: n,
            benign_fraction,
            n_features,
            benign: ClusterSpec {
                means: benign_means,
                spreads: vec![0.12; n_features],
                correlation: 0.94,
                factor_signs: Some(signs),
            },
            attack: ClusterSpec {
                means: attack_means,
                spreads: vec![0.20; n_features],
                correlation: 0.0,
                factor_signs: None,
            },
            seed,
        }),
    }
}

pub fn probe_config() -> ExperimentConfig {
    let silos = vec![
        silo("bot", 30000, 0.004, vec![0.40, 0.55, 0.38, 0.60, 0.43, 0.52, 0.46, 0.58], vec![1.; 8], 101),
        silo("ton", 30000, 0.36,  vec![0.55, 0.40, 0.62, 0.45, 0.58, 0.40, 0.60, 0.43], vec![1.; 8], 102),
        silo("unsw", 30000, 0.96, vec![0.45, 0.60, 0.50, 0.38, 0.62, 0.46, 0.40, 0.55], vec![1.; 8], 103),
        silo("cic", 30000, 0.88,  vec![0.60, 0.48, 0.43, 0.55, 0.38, 0.60, 0.52, 0.40], vec![1.; 8], 104),
    ];
    let toml_src = r#"
tag = "synthetic"
rounds = 10
seed = 42
[[silos]]
name = "placeholder"
cache = "x"
"#;
    let mut cfg: ExperimentConfig = toml::from_str(toml_src).unwrap();
    cfg.silos = silos;
    cfg.efc = EfcConfig { q_bins: 6, alpha: 0.5, quantile: 0.95, ridge: 1e-6 };
    cfg.detection_mode = DetectionMode::DualThreshold;
    cfg.stacking = true;
    cfg.strategy = Strategy::FedAvg;
    cfg
}

fn main() {
    let t0 = std::time::Instant::now();
    let cfg = probe_config();

    let local = run_local(&cfg).unwrap();
    for s in &local.silos { eprintln!("  local {}: f1 {:.4}", s.silo, s.metrics.f1); }
    eprintln!("local avg f1 (stacked, dual): {:.4}  [{:?}]", local.average_f1, t0.elapsed());

    let cross = run_cross(&cfg).unwrap();
    for c in &cross.cells { eprintln!("  cross {}->{}: f1 {:.4}", c.train_silo, c.eval_silo, c.metrics.f1); }
    eprintln!("cross avg f1 (stacked, dual): {:.4}  [{:?}]", cross.average_f1, t0.elapsed());

    let fed = run_federated(&cfg).unwrap();
    for r in &fed.rounds { eprintln!("  fed round {}: avg f1 {:.4}", r.round, r.averages.f1); }
    eprintln!("fed avg f1 (stacked, dual): {:.4}  [{:?}]", fed.final_average_f1(), t0.elapsed());

    let mut unstacked = probe_config();
    unstacked.stacking = false;
    let fed_plain = run_federated(&unstacked).unwrap();
    for s in &fed_plain.final_silos { eprintln!("  unstacked fed {}: f1 {:.4}", s.silo, s.metrics.f1); }
    eprintln!("fed avg f1 (unstacked, dual): {:.4}  [{:?}]", fed_plain.final_average_f1(), t0.elapsed());

    let mut benign_only = probe_config();
    benign_only.detection_mode = DetectionMode::BenignOnly;
    let fed_benign = run_federated(&benign_only).unwrap();
    eprintln!("fed avg f1 (stacked, benign-only): {:.4}  [{:?}]", fed_benign.final_average_f1(), t0.elapsed());

    eprintln!("\n== summary ==");
    eprintln!("(7a) stacked {:.4} > unstacked {:.4}: {}", fed.final_average_f1(), fed_plain.final_average_f1(), fed.final_average_f1() > fed_plain.final_average_f1());
    eprintln!("(7b) federated {:.4} > cross {:.4}: {}", fed.final_average_f1(), cross.average_f1, fed.final_average_f1() > cross.average_f1);
    eprintln!("(7c) dual {:.4} >= benign-only {:.4} - 0.05: {}", fed.final_average_f1(), fed_benign.final_average_f1(), fed.final_average_f1() >= fed_benign.final_average_f1() - 0.05);
    eprintln!("total time {:?}", t0.elapsed());
}
