//! Experiment configuration: one TOML file describing the silos, the
//! pipeline switches and every constant an experiment depends on. The
//! resolved config is written next to the results, so any run can be
//! reproduced from its output directory alone.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fednids_core::autoencoder::TrainConfig;
use fednids_core::dataset::{
    generate_synthetic_silo, load_csv, read_cache, sample_uniform, FlowDataset, FlowSchema,
    SyntheticSiloSpec,
};
use fednids_core::detector::DetectionMode;
use fednids_core::efc::EfcConfig;
use fednids_core::fedcore::{Strategy, StrategyConfig};

/// Where one silo's data comes from: a CSV plus schema, a prepared binary
/// cache, or a synthetic generator spec. Exactly one must be set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiloSource {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSiloSpec>,
}

fn default_tag() -> String {
    "synthetic".into()
}

fn default_rounds() -> usize {
    10
}

fn default_seed() -> u64 {
    42
}

fn default_stacking() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Configuration label: original | sampled | reduced | synthetic.
    #[serde(default = "default_tag")]
    pub tag: String,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_mode")]
    pub detection_mode: DetectionMode,
    #[serde(default = "default_stacking")]
    pub stacking: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Uniform subsample per silo before the pipeline; omit to use all rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(default)]
    pub warmup_rounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub efc: EfcConfig,
    /// Local training constants; the per-client seed is derived from `seed`.
    #[serde(default)]
    pub training: TrainConfig,
    /// Server optimizer constants; omitted fields use the strategy defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server: Option<StrategyConfig>,
    pub silos: Vec<SiloSource>,
}

fn default_strategy() -> Strategy {
    Strategy::FedAvg
}

fn default_mode() -> DetectionMode {
    DetectionMode::DualThreshold
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.silos.is_empty() {
            bail!("config lists no silos");
        }
        if self.rounds == 0 {
            bail!("rounds must be at least 1");
        }
        if !(self.efc.quantile > 0.0 && self.efc.quantile < 1.0) {
            bail!("efc.quantile must lie in (0, 1)");
        }
        for silo in &self.silos {
            let sources = usize::from(silo.csv.is_some())
                + usize::from(silo.cache.is_some())
                + usize::from(silo.synthetic.is_some());
            if sources != 1 {
                bail!(
                    "silo `{}` must set exactly one of csv, cache or synthetic",
                    silo.name
                );
            }
            if silo.csv.is_some() && silo.schema.is_none() {
                bail!("silo `{}` uses a csv source but names no schema", silo.name);
            }
        }
        Ok(())
    }

    /// Server constants, falling back to the per-strategy defaults.
    pub fn server_config(&self) -> StrategyConfig {
        self.server
            .unwrap_or_else(|| StrategyConfig::defaults_for(self.strategy))
    }

    /// Loads every silo in config order, applying the optional subsample.
    pub fn load_silos(&self) -> Result<Vec<FlowDataset>> {
        self.silos
            .iter()
            .enumerate()
            .map(|(i, source)| self.load_silo(source, i as u64))
            .collect()
    }

    fn load_silo(&self, source: &SiloSource, index: u64) -> Result<FlowDataset> {
        let mut ds = if let Some(spec) = &source.synthetic {
            let mut spec = spec.clone();
            if spec.name.is_empty() {
                spec.name = source.name.clone();
            }
            generate_synthetic_silo(&spec)?
        } else if let Some(path) = &source.cache {
            read_cache(path, &source.name, &self.tag)
                .with_context(|| format!("loading cache {}", path.display()))?
        } else if let Some(path) = &source.csv {
            let schema_path = source.schema.as_ref().expect("validated");
            let schema = load_schema(schema_path)?;
            let mut ds = load_csv(path, &schema)
                .with_context(|| format!("loading csv {}", path.display()))?;
            ds.provenance.silo = source.name.clone();
            ds.provenance.tag = self.tag.clone();
            ds
        } else {
            unreachable!("validated");
        };

        if let Some(n) = self.sample_size {
            if n < ds.n_rows() {
                ds = sample_uniform(&ds, n, self.seed.wrapping_add(index))?;
            }
        }
        Ok(ds)
    }
}

/// Reads a column-role schema file (TOML).
pub fn load_schema(path: &Path) -> Result<FlowSchema> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading schema {}", path.display()))?;
    let schema: FlowSchema =
        toml::from_str(&text).with_context(|| format!("parsing schema {}", path.display()))?;
    Ok(schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
tag = "synthetic"
rounds = 3

[[silos]]
name = "a"

[silos.synthetic]
n_samples = 100
benign_fraction = 0.5
n_features = 2
seed = 1
benign = { means = [0.2, 0.2], spreads = [0.05, 0.05] }
attack = { means = [0.8, 0.8], spreads = [0.05, 0.05] }
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.strategy, Strategy::FedAvg);
        assert_eq!(cfg.rounds, 3);
        assert!(cfg.stacking);
        assert_eq!(cfg.detection_mode, DetectionMode::DualThreshold);
        assert_eq!(cfg.efc.q_bins, 30);
        assert_eq!(cfg.training.batch_size, 128);
        assert_eq!(cfg.training.epochs, 10);
        let silos = cfg.load_silos().unwrap();
        assert_eq!(silos.len(), 1);
        assert_eq!(silos[0].n_rows(), 100);
        assert_eq!(silos[0].provenance.silo, "a");
    }

    #[test]
    fn a_silo_without_a_source_is_rejected() {
        let broken = r#"
[[silos]]
name = "a"
"#;
        let cfg: ExperimentConfig = toml::from_str(broken).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_silo_requires_a_schema() {
        let broken = r#"
[[silos]]
name = "a"
csv = "a.csv"
"#;
        let cfg: ExperimentConfig = toml::from_str(broken).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.rounds, cfg.rounds);
        assert_eq!(back.silos[0].name, cfg.silos[0].name);
    }
}
