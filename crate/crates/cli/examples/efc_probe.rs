// temp probe: per-silo EFC prediction quality and threshold geometry
use fednids_cli::config::SiloSource;
use fednids_cli::pipeline::prepare_silo;
use fednids_core::dataset::{ClusterSpec, SyntheticSiloSpec, generate_synthetic_silo};
use fednids_core::efc::{EfcConfig, predict};
use fednids_core::metrics::{confusion, compute_metrics};

fn silo(name: &str, n: usize, benign_fraction: f64, benign_means: Vec<f64>, shift_dims: &[usize], seed: u64) -> SyntheticSiloSpec {
    let n_features = benign_means.len();
    let mut attack_means = benign_means.clone();
    for &d in shift_dims { attack_means[d] += 0.15; }
    SyntheticSiloSpec {
        name: name.into(), n_samples: n, benign_fraction, n_features,
        benign: ClusterSpec { means: benign_means, spreads: vec![0.06; n_features] },
        attack: ClusterSpec { means: attack_means, spreads: vec![0.09; n_features] },
        seed,
    }
}

fn main() {
    let specs = vec![
        silo("bot", 30000, 0.004, vec![0.30, 0.45, 0.28, 0.50, 0.33, 0.42, 0.36, 0.48], &[0, 2, 4, 6], 101),
        silo("ton", 12000, 0.36,  vec![0.45, 0.30, 0.52, 0.35, 0.48, 0.30, 0.50, 0.33], &[1, 3, 5, 7], 102),
        silo("unsw", 12000, 0.96, vec![0.35, 0.50, 0.40, 0.28, 0.52, 0.36, 0.30, 0.45], &[0, 1, 4, 5], 103),
        silo("cic", 12000, 0.88,  vec![0.50, 0.38, 0.33, 0.45, 0.28, 0.50, 0.42, 0.30], &[2, 3, 6, 7], 104),
    ];
    let efc_cfg = EfcConfig { q_bins: 6, alpha: 0.5, quantile: 0.95, ridge: 1e-6 };
    for (i, spec) in specs.iter().enumerate() {
        let raw = generate_synthetic_silo(spec).unwrap();
        let p = prepare_silo(&raw, true, &efc_cfg, 1000 + 42 + i as u64).unwrap();
        let model = p.efc.as_ref().unwrap();
        // EFC quality on the unstacked test rows
        let preds = predict(model, &p.test_unstacked).unwrap();
        let cm = confusion(p.test_unstacked.labels(), &preds).unwrap();
        let m = compute_metrics(&cm);
        println!("{}: efc test f1 {:.4} precision {:.4} recall {:.4} fallout {:.4} (tp {} fp {} fn {} tn {})",
            spec.name, m.f1, m.precision, m.recall, m.fallout, cm.tp, cm.fp, cm.fn_, cm.tn);
    }
}
