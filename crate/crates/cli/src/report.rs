//! Report emission: JSON summaries, JSONL round logs, per-round CSVs and
//! per-sample misclassification CSVs for error analysis. Output bytes are a
//! pure function of the results, so identical runs write identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use fednids_core::fedcore::RoundReport;

use crate::config::ExperimentConfig;
use crate::experiment::{CrossRun, FedRun, LocalRun, SampleRecord, SiloEvaluation};

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Echoes the resolved config next to the results for provenance.
fn write_config(cfg: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("config.toml");
    fs::write(&path, toml::to_string_pretty(cfg)?)?;
    Ok(path)
}

fn write_misclassified(silo: &str, records: &[SampleRecord], dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("misclassified_{silo}.csv"));
    let mut out = String::from("row,loss,predicted,actual\n");
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.row, r.loss, r.predicted, r.actual));
    }
    fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_all_misclassified(silos: &[SiloEvaluation], dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    for s in silos {
        files.push(write_misclassified(&s.silo, &s.misclassified, dir)?);
    }
    Ok(())
}

/// Per-round, per-client metric table.
pub fn per_client_csv(rounds: &[RoundReport]) -> String {
    let mut out = String::from(
        "round,client,tp,fp,fn,tn,accuracy,precision,recall,f1,\
         missrate_paper,fnr_standard,fallout,auc,t_benign,t_attack\n",
    );
    for round in rounds {
        for c in &round.clients {
            let m = &c.metrics;
            let t_attack = c
                .thresholds
                .t_attack
                .map(|t| t.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                round.round,
                c.client,
                m.confusion.tp,
                m.confusion.fp,
                m.confusion.fn_,
                m.confusion.tn,
                m.accuracy,
                m.precision,
                m.recall,
                m.f1,
                m.missrate_paper,
                m.fnr_standard,
                m.fallout,
                m.auc,
                c.thresholds.t_benign,
                t_attack,
            ));
        }
    }
    out
}

#[derive(Serialize)]
struct RunHeader<'a> {
    tag: &'a str,
    strategy: String,
    detection_mode: &'a fednids_core::detector::DetectionMode,
    stacking: bool,
    seed: u64,
}

impl<'a> RunHeader<'a> {
    fn from_config(cfg: &'a ExperimentConfig) -> Self {
        Self {
            tag: &cfg.tag,
            strategy: cfg.strategy.to_string(),
            detection_mode: &cfg.detection_mode,
            stacking: cfg.stacking,
            seed: cfg.seed,
        }
    }
}

#[derive(Serialize)]
struct LocalSummary<'a> {
    #[serde(flatten)]
    header: RunHeader<'a>,
    average_f1: f64,
    silos: &'a [SiloEvaluation],
}

/// Writes the local-run summary and misclassification CSVs.
pub fn write_local_report(run: &LocalRun, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut files = vec![write_config(cfg, dir)?];
    let summary = dir.join("summary.json");
    write_json(
        &LocalSummary {
            header: RunHeader::from_config(cfg),
            average_f1: run.average_f1,
            silos: &run.silos,
        },
        &summary,
    )?;
    files.push(summary);
    write_all_misclassified(&run.silos, dir, &mut files)?;
    Ok(files)
}

#[derive(Serialize)]
struct CrossSummary<'a> {
    #[serde(flatten)]
    header: RunHeader<'a>,
    average_f1: f64,
    cells: &'a [crate::experiment::CrossCell],
}

/// Writes the cross-evaluation matrix and its off-diagonal average.
pub fn write_cross_report(run: &CrossRun, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut files = vec![write_config(cfg, dir)?];
    let summary = dir.join("cross.json");
    write_json(
        &CrossSummary {
            header: RunHeader::from_config(cfg),
            average_f1: run.average_f1,
            cells: &run.cells,
        },
        &summary,
    )?;
    files.push(summary);
    Ok(files)
}

#[derive(Serialize)]
struct FedSummary<'a> {
    #[serde(flatten)]
    header: RunHeader<'a>,
    rounds: usize,
    final_average_f1: f64,
    final_round: &'a RoundReport,
}

/// Writes rounds.jsonl, per_client.csv, summary.json and the final-round
/// misclassification CSVs.
pub fn write_fed_report(run: &FedRun, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut files = vec![write_config(cfg, dir)?];

    let jsonl_path = dir.join("rounds.jsonl");
    let mut jsonl = String::new();
    for round in &run.rounds {
        jsonl.push_str(&serde_json::to_string(round)?);
        jsonl.push('\n');
    }
    fs::write(&jsonl_path, jsonl)?;
    files.push(jsonl_path);

    let csv_path = dir.join("per_client.csv");
    fs::write(&csv_path, per_client_csv(&run.rounds))?;
    files.push(csv_path);

    let summary = dir.join("summary.json");
    let last = run.rounds.last().context("federated run has no rounds")?;
    write_json(
        &FedSummary {
            header: RunHeader::from_config(cfg),
            rounds: run.rounds.len(),
            final_average_f1: run.final_average_f1(),
            final_round: last,
        },
        &summary,
    )?;
    files.push(summary);

    write_all_misclassified(&run.final_silos, dir, &mut files)?;
    Ok(files)
}

/// Re-derives summary.json and per_client.csv from a rounds.jsonl file.
pub fn summarize_rounds(jsonl_path: &Path, dir: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(jsonl_path)
        .with_context(|| format!("reading {}", jsonl_path.display()))?;
    let rounds: Vec<RoundReport> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<std::result::Result<_, _>>()
        .context("parsing round reports")?;
    if rounds.is_empty() {
        anyhow::bail!("no round reports in {}", jsonl_path.display());
    }
    ensure_dir(dir)?;
    let mut files = Vec::new();

    let csv_path = dir.join("per_client.csv");
    fs::write(&csv_path, per_client_csv(&rounds))?;
    files.push(csv_path);

    #[derive(Serialize)]
    struct RoundsSummary<'a> {
        rounds: usize,
        final_average_f1: f64,
        final_round: &'a RoundReport,
    }
    let summary = dir.join("summary.json");
    let last = rounds.last().unwrap();
    write_json(
        &RoundsSummary {
            rounds: rounds.len(),
            final_average_f1: last.averages.f1,
            final_round: last,
        },
        &summary,
    )?;
    files.push(summary);
    Ok(files)
}
