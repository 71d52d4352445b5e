//! Experiment configuration: a sectioned TOML document with every key checked.

use std::path::{Path, PathBuf};

use deepmod_core::channel::{default_plc_taps, ChannelConfig, ChannelKind, Jammer};
use deepmod_core::graphs::ArchConfig;
use deepmod_core::protocol::{LearningRates, TrainingConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub seeds: Vec<u64>,
    pub embedding_dim: usize,
    pub encoder_hidden: usize,
    pub decoder_hidden1: usize,
    pub decoder_hidden2: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub pool_window: usize,
    pub critic_hidden1: usize,
    pub critic_hidden2: usize,
    pub critic_sees_class: bool,
}

impl Default for LinkSection {
    fn default() -> Self {
        let a = ArchConfig::default();
        Self {
            num_classes: a.num_classes,
            samples_per_class: a.samples_per_class,
            seeds: vec![0],
            embedding_dim: a.embedding_dim,
            encoder_hidden: a.encoder_hidden,
            decoder_hidden1: a.decoder_hidden1,
            decoder_hidden2: a.decoder_hidden2,
            conv_filters: a.conv_filters,
            conv_kernel: a.conv_kernel,
            pool_window: a.pool_window,
            critic_hidden1: a.critic_hidden1,
            critic_hidden2: a.critic_hidden2,
            critic_sees_class: a.critic_sees_class,
        }
    }
}

impl LinkSection {
    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            num_classes: self.num_classes,
            samples_per_class: self.samples_per_class,
            embedding_dim: self.embedding_dim,
            encoder_hidden: self.encoder_hidden,
            decoder_hidden1: self.decoder_hidden1,
            decoder_hidden2: self.decoder_hidden2,
            conv_filters: self.conv_filters,
            conv_kernel: self.conv_kernel,
            pool_window: self.pool_window,
            critic_hidden1: self.critic_hidden1,
            critic_hidden2: self.critic_hidden2,
            critic_sees_class: self.critic_sees_class,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub train_snr_db: f64,
    pub max_epochs: usize,
    pub lr_encoder: f64,
    pub lr_decoder: f64,
    pub lr_critic: f64,
    pub early_stop: bool,
    pub early_stop_threshold: f64,
    pub early_stop_patience: usize,
    /// Save both nodes every this many epochs (0: only at the end).
    pub checkpoint_every: usize,
    /// Record every waveform crossing the channel to `transcript.jsonl`.
    pub transcript: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            train_snr_db: t.train_snr_db,
            max_epochs: t.max_epochs,
            lr_encoder: t.learning_rates.encoder,
            lr_decoder: t.learning_rates.decoder,
            lr_critic: t.learning_rates.critic,
            early_stop: false,
            early_stop_threshold: 0.99,
            early_stop_patience: 10,
            checkpoint_every: 50,
            transcript: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub kind: ChannelKind,
    /// Receive SNR outside training and sweeps (those substitute their own SNR).
    pub snr_db: f64,
    /// Complex taps as `[re, im]` pairs; `fir_selective` defaults to a powerline-like profile.
    pub fir_taps: Option<Vec<[f64; 2]>>,
    pub phase_offset_rad: f64,
    pub sample_rate_hz: Option<f64>,
    pub seed: u64,
    pub jammer_frequency: Option<f64>,
    pub jammer_power_ratio: Option<f64>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            kind: ChannelKind::AwgnFlat,
            snr_db: 10.0,
            fir_taps: None,
            phase_offset_rad: 0.0,
            sample_rate_hz: None,
            seed: 0,
            jammer_frequency: None,
            jammer_power_ratio: None,
        }
    }
}

impl ChannelSection {
    pub fn to_channel(&self) -> Result<ChannelConfig, String> {
        let mut c = ChannelConfig::new(self.kind, self.snr_db);
        if let Some(taps) = &self.fir_taps {
            c.fir_taps = taps.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        } else if self.kind == ChannelKind::FirSelective {
            c.fir_taps = default_plc_taps();
        }
        c.phase_offset_rad = self.phase_offset_rad;
        if let Some(r) = self.sample_rate_hz {
            c.sample_rate_hz = r;
        }
        c.seed = self.seed;
        c.jammer = match (self.jammer_frequency, self.jammer_power_ratio) {
            (Some(frequency), Some(power_ratio)) => Some(Jammer {
                frequency,
                power_ratio,
            }),
            (None, None) => None,
            _ => return Err("jammer_frequency and jammer_power_ratio must be given together".into()),
        };
        if let Some(j) = &c.jammer {
            if !(j.power_ratio >= 0.0 && j.power_ratio.is_finite()) {
                return Err(format!("jammer_power_ratio must be >= 0, got {}", j.power_ratio));
            }
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    CerSweep,
    TrainSnrConvergence,
    TrainSnrSweep,
    JammerRetrain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub test_snr_grid_db: Vec<f64>,
    pub train_snr_grid_db: Vec<f64>,
    /// Classes sent per direction at every CER point.
    pub trials: usize,
    pub convergence_threshold: f64,
    /// Directory holding `seed_<n>/node_{a,b}.ckpt` (or `node_{a,b}.ckpt` directly) to evaluate
    /// instead of training.
    pub checkpoint_dir: Option<PathBuf>,
    /// Train a link first when no checkpoint directory is given.
    pub train_inline: bool,
    pub jammer_frequency: f64,
    pub jammer_power_ratio: f64,
    pub retrain_epochs: usize,
    /// Root seed of the evaluation channels and class draws.
    pub eval_seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Convergence,
            test_snr_grid_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            train_snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 30.0],
            trials: 10_000,
            convergence_threshold: 0.9,
            checkpoint_dir: None,
            train_inline: true,
            jammer_frequency: 0.125,
            jammer_power_ratio: 1.0,
            retrain_epochs: 200,
            eval_seed: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("runs/default"),
            plot: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub link: LinkSection,
    pub training: TrainingSection,
    pub channel_fwd: ChannelSection,
    pub channel_rev: ChannelSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

/// Line (1-based) of `key` inside `[section]`, for diagnostics on semantically invalid values.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_override_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

impl ExperimentConfig {
    /// Parses `text`, applies `section.key=value` overrides and validates everything.
    pub fn parse(text: &str, origin: &str, overrides: &[String]) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        let cfg = if overrides.is_empty() {
            cfg
        } else {
            let mut table: toml::Table = toml::from_str(text)
                .map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
            for ov in overrides {
                let (path, value) = ov.split_once('=').ok_or_else(|| {
                    CliError::Config(format!("override `{ov}` is not section.key=value"))
                })?;
                let (section, key) = path.trim().split_once('.').ok_or_else(|| {
                    CliError::Config(format!("override key `{path}` is not section.key"))
                })?;
                let entry = table
                    .entry(section.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                let sect = entry.as_table_mut().ok_or_else(|| {
                    CliError::Config(format!("override `{ov}`: `{section}` is not a section"))
                })?;
                sect.insert(key.to_string(), parse_override_value(value.trim()));
            }
            let merged = toml::to_string(&table)
                .map_err(|e| CliError::Config(format!("applying overrides: {e}")))?;
            toml::from_str(&merged)
                .map_err(|e| CliError::Config(format!("after overrides {overrides:?}: {e}")))?
        };
        cfg.validate(text, origin)?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string(), overrides)
    }

    fn validate(&self, text: &str, origin: &str) -> Result<(), CliError> {
        let fail = |section: &str, key: &str, msg: String| {
            let at = locate(text, section, key)
                .map(|l| format!("{origin}:{l}: "))
                .unwrap_or_else(|| format!("{origin}: "));
            CliError::Config(format!("{at}[{section}] {key}: {msg}"))
        };
        if self.link.seeds.is_empty() {
            return Err(fail("link", "seeds", "at least one seed is required".into()));
        }
        self.link
            .arch()
            .validate()
            .map_err(|e| fail("link", "num_classes", e.to_string()))?;
        let t = &self.training;
        if !t.train_snr_db.is_finite() {
            return Err(fail("training", "train_snr_db", "must be finite".into()));
        }
        for (key, lr) in [
            ("lr_encoder", t.lr_encoder),
            ("lr_decoder", t.lr_decoder),
            ("lr_critic", t.lr_critic),
        ] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(fail("training", key, format!("must be finite and >= 0, got {lr}")));
            }
        }
        if t.early_stop && !(t.early_stop_threshold > 0.0 && t.early_stop_threshold <= 1.0) {
            return Err(fail("training", "early_stop_threshold", "must be in (0, 1]".into()));
        }
        if t.early_stop && t.early_stop_patience == 0 {
            return Err(fail("training", "early_stop_patience", "must be >= 1".into()));
        }
        for (section, ch) in [("channel_fwd", &self.channel_fwd), ("channel_rev", &self.channel_rev)] {
            ch.to_channel().map_err(|e| fail(section, "kind", e))?;
        }
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(fail("experiment", "trials", "must be at least 1".into()));
        }
        if !(e.convergence_threshold > 0.0 && e.convergence_threshold <= 1.0) {
            return Err(fail("experiment", "convergence_threshold", "must be in (0, 1]".into()));
        }
        for (key, grid) in [
            ("test_snr_grid_db", &e.test_snr_grid_db),
            ("train_snr_grid_db", &e.train_snr_grid_db),
        ] {
            if grid.iter().any(|v| !v.is_finite()) {
                return Err(fail("experiment", key, "grid values must be finite".into()));
            }
        }
        if !(-0.5..0.5).contains(&e.jammer_frequency) {
            return Err(fail("experiment", "jammer_frequency", "must be in [-0.5, 0.5)".into()));
        }
        if !(e.jammer_power_ratio >= 0.0 && e.jammer_power_ratio.is_finite()) {
            return Err(fail("experiment", "jammer_power_ratio", "must be >= 0".into()));
        }
        Ok(())
    }

    /// Extra checks for the train-SNR study.
    pub fn validate_study(&self) -> Result<(), CliError> {
        let n = self.experiment.train_snr_grid_db.len();
        if n < 3 {
            return Err(CliError::Config(format!(
                "[experiment] train_snr_grid_db: the study needs at least 3 train SNRs, got {n}"
            )));
        }
        if self.experiment.test_snr_grid_db.is_empty() {
            return Err(CliError::Config(
                "[experiment] test_snr_grid_db: at least one test SNR is required".into(),
            ));
        }
        Ok(())
    }

    /// Core training settings for one seed at `train_snr_db`.
    pub fn training_config(&self, seed: u64, train_snr_db: f64) -> TrainingConfig {
        let t = &self.training;
        TrainingConfig {
            arch: self.link.arch(),
            train_snr_db,
            max_epochs: t.max_epochs,
            seed,
            learning_rates: LearningRates {
                encoder: t.lr_encoder,
                decoder: t.lr_decoder,
                critic: t.lr_critic,
            },
            channel_fwd: self.channel_fwd.to_channel().expect("validated"),
            channel_rev: self.channel_rev.to_channel().expect("validated"),
            early_stop_threshold: t.early_stop.then_some(t.early_stop_threshold),
            early_stop_patience: t.early_stop_patience,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}
