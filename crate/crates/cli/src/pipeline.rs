//! Per-silo data pipeline: min-max scale on the whole silo, split 80/20,
//! fit the EFC on the benign training rows, append its predictions to both
//! train and test, then split the stacked training data 90/10 into
//! train/validation.

use anyhow::{Context, Result};

use fednids_core::dataset::{
    apply_minmax, fit_minmax, split_train_test, split_train_val, FlowDataset, SplitBundle,
};
use fednids_core::efc::{fit_efc, predict, stack_feature, EfcConfig, EfcModel};

/// One silo after preparation. `test_unstacked` keeps the scaled test rows
/// before any EFC column so cross-evaluation can stack a foreign silo's test
/// set with the training silo's own EFC.
#[derive(Debug, Clone)]
pub struct PreparedSilo {
    pub name: String,
    pub bundle: SplitBundle,
    pub efc: Option<EfcModel>,
    pub test_unstacked: FlowDataset,
}

/// Runs the preparation pipeline on one raw silo.
pub fn prepare_silo(
    raw: &FlowDataset,
    stacking: bool,
    efc_cfg: &EfcConfig,
    seed: u64,
) -> Result<PreparedSilo> {
    let name = raw.provenance.silo.clone();
    let scaler = fit_minmax(raw).with_context(|| format!("scaling silo `{name}`"))?;
    let scaled = apply_minmax(raw, &scaler)?;

    let (mut train80, mut test) = split_train_test(&scaled, 0.2, seed)?;
    let test_unstacked = test.clone();

    let efc = if stacking {
        let benign = train80.benign_rows();
        let model = fit_efc(&benign, efc_cfg)
            .with_context(|| format!("fitting the EFC on silo `{name}`"))?;
        let train_preds = predict(&model, &train80)?;
        let test_preds = predict(&model, &test)?;
        train80 = stack_feature(&train80, &train_preds)?;
        test = stack_feature(&test, &test_preds)?;
        Some(model)
    } else {
        None
    };

    let (train, validation) = split_train_val(&train80, 0.1, seed.wrapping_add(1))?;
    Ok(PreparedSilo {
        name,
        bundle: SplitBundle {
            train,
            validation,
            test,
            seed,
        },
        efc,
        test_unstacked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fednids_core::dataset::{generate_synthetic_silo, ClusterSpec, SyntheticSiloSpec};
    use fednids_core::efc::STACKED_COLUMN;

    fn silo(n: usize) -> FlowDataset {
        generate_synthetic_silo(&SyntheticSiloSpec {
            name: "s".into(),
            n_samples: n,
            benign_fraction: 0.7,
            n_features: 3,
            benign: ClusterSpec::independent(vec![0.3; 3], vec![0.05; 3]),
            attack: ClusterSpec::independent(vec![0.8; 3], vec![0.05; 3]),
            seed: 5,
        })
        .unwrap()
    }

    #[test]
    fn splits_partition_the_silo_72_8_20() {
        let raw = silo(1000);
        let cfg = EfcConfig {
            q_bins: 4,
            ..Default::default()
        };
        let p = prepare_silo(&raw, true, &cfg, 9).unwrap();
        assert_eq!(p.bundle.train.n_rows(), 720);
        assert_eq!(p.bundle.validation.n_rows(), 80);
        assert_eq!(p.bundle.test.n_rows(), 200);
    }

    #[test]
    fn stacking_adds_exactly_one_input_dimension() {
        let raw = silo(800);
        let cfg = EfcConfig {
            q_bins: 4,
            ..Default::default()
        };
        let stacked = prepare_silo(&raw, true, &cfg, 1).unwrap();
        let plain = prepare_silo(&raw, false, &cfg, 1).unwrap();
        assert_eq!(
            stacked.bundle.train.n_features(),
            plain.bundle.train.n_features() + 1
        );
        assert_eq!(
            stacked.bundle.test.schema.feature_names.last().unwrap(),
            STACKED_COLUMN
        );
        assert!(stacked.efc.is_some());
        assert!(plain.efc.is_none());
        assert_eq!(stacked.test_unstacked.n_features(), plain.bundle.test.n_features());
    }

    #[test]
    fn preparation_is_deterministic() {
        let raw = silo(600);
        let cfg = EfcConfig {
            q_bins: 4,
            ..Default::default()
        };
        let a = prepare_silo(&raw, true, &cfg, 3).unwrap();
        let b = prepare_silo(&raw, true, &cfg, 3).unwrap();
        assert_eq!(a.bundle.train.features(), b.bundle.train.features());
        assert_eq!(a.bundle.test.labels(), b.bundle.test.labels());
    }
}
