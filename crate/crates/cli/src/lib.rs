//! Command-line front end for running learned-link experiments.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::RunOptions;
pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "deepmod", version, about = "Two-node learned physical layer experiments")]
pub struct Cli {
    /// Experiment configuration (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run a single seed instead of `link.seeds`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `section.key=value`, applied after the file is read. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Run seeds and sweep points one after another.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Continue from checkpoints already in the output directory.
    #[arg(long, global = true)]
    pub resume: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one link per seed.
    Train {
        /// Overrides `training.max_epochs`.
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Train (or load) a link, then measure CER over the test SNR grid.
    CerSweep,
    /// Train and evaluate across the train SNR grid.
    TrainSnrStudy,
    /// Converge, switch on a tone jammer, retrain.
    JammerRetrain,
    /// Render SVG charts from the CSVs of a finished run.
    Plot {
        /// Run directory (defaults to the output directory).
        run_dir: Option<PathBuf>,
    },
    /// Round-trip a checkpoint through save/load and compare probe outputs.
    VerifyCheckpoint { path: PathBuf },
}

impl Cli {
    fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path, &self.overrides)?,
            None => ExperimentConfig::parse("", "<defaults>", &self.overrides)?,
        };
        if let Some(seed) = self.seed {
            cfg.link.seeds = vec![seed];
        }
        if let Some(out) = &self.out {
            cfg.output.directory = out.clone();
        }
        if let Command::Train {
            max_epochs: Some(n),
        } = self.command
        {
            cfg.training.max_epochs = n;
        }
        Ok(cfg)
    }

    fn options(&self, cfg: &ExperimentConfig) -> RunOptions {
        RunOptions {
            out: cfg.output.directory.clone(),
            parallel: !self.deterministic,
            resume: self.resume,
        }
    }
}

/// Runs one parsed invocation, printing a short summary to stdout.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Plot { run_dir } => {
            let dir = match (run_dir, &cli.out) {
                (Some(d), _) | (None, Some(d)) => d.clone(),
                (None, None) => cli.experiment_config()?.output.directory,
            };
            for p in plot::plot_run(&dir)? {
                println!("{}", p.display());
            }
            return Ok(());
        }
        Command::VerifyCheckpoint { path } => {
            let r = commands::cmd_verify_checkpoint(path)?;
            println!(
                "{}: node {:?} epoch {}: {} layers, {} parameters, {} probe values identical",
                path.display(),
                r.node,
                r.next_epoch,
                r.layers,
                r.parameters,
                r.probe_values
            );
            return Ok(());
        }
        _ => {}
    }

    let cfg = cli.experiment_config()?;
    let opts = cli.options(&cfg);
    match cli.command {
        Command::Train { .. } => {
            for r in commands::cmd_train(&cfg, &opts)? {
                println!(
                    "seed {}: {} epochs, convergence epoch {}, final success {}",
                    r.seed,
                    r.log.epochs().len(),
                    opt(r.convergence_epoch),
                    opt(r.final_success.map(|s| format!("{s:.4}")))
                );
            }
        }
        Command::CerSweep => {
            let o = commands::cmd_cer_sweep(&cfg, &opts)?;
            for p in o.pooled.points() {
                println!("{:>6.1} dB  CER {:.5} ± {:.5}", p.test_snr_db, p.cer, p.stderr);
            }
        }
        Command::TrainSnrStudy => {
            let o = commands::cmd_train_snr_study(&cfg, &opts)?;
            for (t, r) in &o.convexity {
                println!(
                    "test {t} dB: best train SNR {} dB (CER {:.5}), interior minimum {}",
                    r.argmin_train_snr_db, r.min_cer, r.interior_minimum
                );
            }
        }
        Command::JammerRetrain => {
            for r in commands::cmd_jammer_retrain(&cfg, &opts)? {
                println!(
                    "seed {}: CER {:.5} clean, {:.5} jammed, {:.5} after retraining; recovery epochs {}",
                    r.seed,
                    r.pre_jam_cer,
                    r.jammed_cer,
                    r.recovered_cer,
                    opt(r.recovery_epochs)
                );
            }
        }
        Command::Plot { .. } | Command::VerifyCheckpoint { .. } => unreachable!(),
    }
    println!("artifacts in {}", opts.out.display());
    Ok(())
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}
