use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use fednids_cli::config::{load_schema, ExperimentConfig};
use fednids_cli::experiment::{run_cross, run_federated, run_local};
use fednids_cli::report::{summarize_rounds, write_cross_report, write_fed_report, write_local_report};
use fednids_core::dataset::{generate_synthetic_silo, load_csv, sample_uniform, write_cache};
use fednids_core::detector::DetectionMode;
use fednids_core::fedcore::Strategy;

/// Stacked-unsupervised federated NIDS experiment driver.
#[derive(Parser)]
#[command(name = "fednids", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config-file flag plus the overrides shared by every run subcommand.
#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir, then $FEDNIDS_OUT, then ./out.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the aggregation strategy.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Override the round count.
    #[arg(long)]
    rounds: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the detection mode (benign-only | dual-threshold).
    #[arg(long)]
    detection_mode: Option<DetectionMode>,
    /// Override EFC stacking (true | false).
    #[arg(long)]
    stacking: Option<bool>,
    /// Override the per-silo uniform subsample size.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Override the warm-up rounds (reduced participation early on).
    #[arg(long)]
    warmup_rounds: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        if let Some(r) = self.rounds {
            cfg.rounds = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.detection_mode {
            cfg.detection_mode = m;
        }
        if let Some(s) = self.stacking {
            cfg.stacking = s;
        }
        if let Some(n) = self.sample_size {
            cfg.sample_size = Some(n);
        }
        if let Some(w) = self.warmup_rounds {
            cfg.warmup_rounds = w;
        }
        cfg.validate()?;
        let out_dir = self
            .out_dir
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .or_else(|| std::env::var_os("FEDNIDS_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out_dir))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a flow CSV under a schema and cache it as a prepared binary
    /// dataset (scaling happens inside the runs).
    Prepare {
        /// Input CSV with a header row.
        #[arg(long)]
        csv: PathBuf,
        /// Column-role schema (TOML).
        #[arg(long)]
        schema: PathBuf,
        /// Silo name recorded in the cache (defaults to the file stem).
        #[arg(long)]
        name: Option<String>,
        /// Optional uniform subsample size.
        #[arg(long)]
        sample: Option<usize>,
        /// Seed for the subsample shuffle.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output cache file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the synthetic silos of a config into cache files.
    Synth {
        #[arg(long, short)]
        config: PathBuf,
        /// Output directory for <name>.bin files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Train and evaluate every silo locally (no federation).
    RunLocal(RunArgs),
    /// Train locally, evaluate on every other silo (naive cross-silo).
    RunCross(RunArgs),
    /// Run the federated simulation.
    RunFed(RunArgs),
    /// Re-derive summary.json and per_client.csv from a rounds.jsonl log.
    Report {
        /// rounds.jsonl produced by run-fed.
        #[arg(long)]
        rounds: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn default_out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os("FEDNIDS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Prepare {
            csv,
            schema,
            name,
            sample,
            seed,
            out,
        } => {
            let schema = load_schema(&schema)?;
            let mut ds = load_csv(&csv, &schema)?;
            if let Some(n) = name {
                ds.provenance.silo = n;
            }
            if let Some(n) = sample {
                if n < ds.n_rows() {
                    ds = sample_uniform(&ds, n, seed)?;
                }
            }
            write_cache(&ds, &out)?;
            println!(
                "prepared {} rows x {} features ({} benign / {} attack) -> {}",
                ds.n_rows(),
                ds.n_features(),
                ds.n_benign(),
                ds.n_attack(),
                out.display()
            );
        }
        Command::Synth { config, out_dir } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let dir = default_out_dir(out_dir);
            std::fs::create_dir_all(&dir)?;
            let mut wrote = 0;
            for source in &cfg.silos {
                let Some(spec) = &source.synthetic else {
                    continue;
                };
                let mut spec = spec.clone();
                if spec.name.is_empty() {
                    spec.name = source.name.clone();
                }
                let ds = generate_synthetic_silo(&spec)
                    .with_context(|| format!("generating silo `{}`", source.name))?;
                let path = dir.join(format!("{}.bin", source.name));
                write_cache(&ds, &path)?;
                println!(
                    "silo `{}`: {} rows ({} benign / {} attack) -> {}",
                    source.name,
                    ds.n_rows(),
                    ds.n_benign(),
                    ds.n_attack(),
                    path.display()
                );
                wrote += 1;
            }
            anyhow::ensure!(wrote > 0, "config lists no synthetic silos");
        }
        Command::RunLocal(args) => {
            let (cfg, dir) = args.load()?;
            let run = run_local(&cfg)?;
            for s in &run.silos {
                println!("local {}: f1 {:.4} auc {:.4}", s.silo, s.metrics.f1, s.metrics.auc);
            }
            println!("average local f1: {:.4}", run.average_f1);
            for f in write_local_report(&run, &cfg, &dir)? {
                println!("wrote {}", f.display());
            }
        }
        Command::RunCross(args) => {
            let (cfg, dir) = args.load()?;
            let run = run_cross(&cfg)?;
            for c in &run.cells {
                println!(
                    "cross {} -> {}: f1 {:.4}",
                    c.train_silo, c.eval_silo, c.metrics.f1
                );
            }
            println!("average cross f1: {:.4}", run.average_f1);
            for f in write_cross_report(&run, &cfg, &dir)? {
                println!("wrote {}", f.display());
            }
        }
        Command::RunFed(args) => {
            let (cfg, dir) = args.load()?;
            let run = run_federated(&cfg)?;
            for round in &run.rounds {
                println!(
                    "round {:>2} [{}]: average f1 {:.4}",
                    round.round, round.strategy, round.averages.f1
                );
            }
            println!("final average f1: {:.4}", run.final_average_f1());
            for f in write_fed_report(&run, &cfg, &dir)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Report { rounds, out_dir } => {
            let dir = default_out_dir(out_dir);
            for f in summarize_rounds(&rounds, &dir)? {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}
