use serde::{Deserialize, Serialize};

use super::link::{Direction, NodeId, Transcript};
use super::node::{LearningRates, Node};
use super::pass::{run_direction_pass, PassOutcome};
use crate::channel::{Channel, ChannelConfig, ChannelKind};
use crate::error::{config, Error, Result};
use crate::graphs::{ArchConfig, Network};
use crate::metrics::{MetricsLog, MetricsRow};

/// SplitMix64 finalizer; derives independent sub-seeds from one run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_INIT_A: u64 = 1;
const STREAM_INIT_B: u64 = 2;
const STREAM_CHANNEL_AB: u64 = 3;
const STREAM_CHANNEL_BA: u64 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub arch: ArchConfig,
    /// Receive SNR applied to both directions during training.
    pub train_snr_db: f64,
    pub max_epochs: usize,
    /// Run seed: the shared schedule seed, and the root of initialization and channel seeds.
    pub seed: u64,
    pub learning_rates: LearningRates,
    pub channel_fwd: ChannelConfig,
    pub channel_rev: ChannelConfig,
    /// Stop once direction-averaged class success stays at or above this for `early_stop_patience` epochs.
    pub early_stop_threshold: Option<f64>,
    pub early_stop_patience: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            arch: ArchConfig::default(),
            train_snr_db: 10.0,
            max_epochs: 200,
            seed: 0,
            learning_rates: LearningRates::default(),
            channel_fwd: ChannelConfig::awgn(10.0),
            channel_rev: ChannelConfig::awgn(10.0),
            early_stop_threshold: Some(0.99),
            early_stop_patience: 10,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        if self.train_snr_db.is_nan() || self.train_snr_db == f64::NEG_INFINITY {
            return Err(config("train_snr_db must be finite or +inf"));
        }
        let lr = self.learning_rates;
        if ![lr.encoder, lr.decoder, lr.critic]
            .iter()
            .all(|r| *r >= 0.0 && r.is_finite())
        {
            return Err(config("learning rates must be finite and non-negative"));
        }
        if let Some(t) = self.early_stop_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return Err(config(format!("early-stop threshold {t} outside (0, 1]")));
            }
            if self.early_stop_patience == 0 {
                return Err(config("early-stop patience must be at least 1"));
            }
        }
        self.channel_fwd.validate()?;
        self.channel_rev.validate()?;
        Ok(())
    }

    /// Channel settings actually used in training: the training SNR replaces each direction's own.
    pub fn training_channel(&self, cfg: &ChannelConfig, stream: u64) -> ChannelConfig {
        let mut c = cfg.clone();
        if c.kind != ChannelKind::Ideal {
            c.snr_db = self.train_snr_db;
        }
        c.seed = derive_seed(self.seed ^ cfg.seed, stream);
        c
    }
}

/// Both passes of one epoch.
#[derive(Clone, Debug)]
pub struct EpochOutcome {
    pub a_to_b: PassOutcome,
    pub b_to_a: PassOutcome,
}

impl EpochOutcome {
    pub fn rows(&self) -> [MetricsRow; 2] {
        [row(&self.a_to_b), row(&self.b_to_a)]
    }

    /// Direction-averaged class success.
    pub fn mean_success(&self) -> f64 {
        0.5 * (self.a_to_b.class_success + self.b_to_a.class_success)
    }
}

fn row(p: &PassOutcome) -> MetricsRow {
    MetricsRow {
        epoch: p.epoch,
        direction: p.direction,
        class_success: p.class_success,
        loss_rx: p.loss_rx,
        loss_tx: p.loss_tx,
        loss_crit: p.loss_crit,
        critic_accuracy: p.critic_accuracy,
        measured_snr_db: p.measured_snr_db,
    }
}

fn check_finite(p: &PassOutcome) -> Result<()> {
    for (name, v) in [
        ("loss_rx", p.loss_rx),
        ("loss_tx", p.loss_tx),
        ("loss_crit", p.loss_crit),
    ] {
        if !v.is_finite() {
            return Err(Error::Divergence {
                epoch: p.epoch,
                detail: format!("{name} = {v} on {} pass", p.direction),
            });
        }
    }
    Ok(())
}

/// Catches blown-up weights before the next pass turns them into NaN samples.
fn check_weights(nodes: [&Node; 2], epoch: usize) -> Result<()> {
    for node in nodes {
        for (net, params) in [
            ("encoder", node.encoder.params()),
            ("decoder", node.decoder.params()),
            ("critic", node.critic.params()),
        ] {
            if let Some(p) = params.iter().find(|p| !p.value.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    detail: format!("node {:?} {net} `{}` is no longer finite", node.id, p.name),
                });
            }
        }
    }
    Ok(())
}

/// Runs the A-to-B pass and then the B-to-A pass.
pub fn run_epoch(
    node_a: &mut Node,
    node_b: &mut Node,
    channel_ab: &mut Channel,
    channel_ba: &mut Channel,
    epoch: usize,
    mut tap: Option<&mut Transcript>,
) -> Result<EpochOutcome> {
    let a_to_b = run_direction_pass(node_a, node_b, channel_ab, channel_ba, epoch, tap.as_deref_mut())?;
    check_finite(&a_to_b)?;
    check_weights([node_a, node_b], epoch)?;
    let b_to_a = run_direction_pass(node_b, node_a, channel_ba, channel_ab, epoch, tap)?;
    check_finite(&b_to_a)?;
    check_weights([node_a, node_b], epoch)?;
    Ok(EpochOutcome { a_to_b, b_to_a })
}

/// Two nodes, the medium between them, and the next epoch to run.
#[derive(Clone, Debug)]
pub struct LinkSession {
    pub node_a: Node,
    pub node_b: Node,
    pub channel_ab: Channel,
    pub channel_ba: Channel,
    pub next_epoch: usize,
}

impl LinkSession {
    pub fn new(cfg: &TrainingConfig) -> Result<Self> {
        cfg.validate()?;
        let node_a = Node::new(
            NodeId::A,
            cfg.arch,
            cfg.learning_rates,
            cfg.seed,
            derive_seed(cfg.seed, STREAM_INIT_A),
        )?;
        let node_b = Node::new(
            NodeId::B,
            cfg.arch,
            cfg.learning_rates,
            cfg.seed,
            derive_seed(cfg.seed, STREAM_INIT_B),
        )?;
        Self::from_nodes(node_a, node_b, cfg, 0)
    }

    /// Resumes from existing nodes at `next_epoch`.
    pub fn from_nodes(node_a: Node, node_b: Node, cfg: &TrainingConfig, next_epoch: usize) -> Result<Self> {
        let channel_ab = Channel::new(cfg.training_channel(&cfg.channel_fwd, STREAM_CHANNEL_AB))?;
        let channel_ba = Channel::new(cfg.training_channel(&cfg.channel_rev, STREAM_CHANNEL_BA))?;
        Ok(Self {
            node_a,
            node_b,
            channel_ab,
            channel_ba,
            next_epoch,
        })
    }

    /// Runs the next epoch. Channel state restarts at every epoch boundary from a seed derived
    /// from the epoch index (the idle gap between batches flushes filter memory), so a session
    /// resumed from checkpointed nodes continues exactly as an uninterrupted one would.
    pub fn run_epoch(&mut self, tap: Option<&mut Transcript>) -> Result<EpochOutcome> {
        let epoch = self.next_epoch as u64;
        for ch in [&mut self.channel_ab, &mut self.channel_ba] {
            let seed = derive_seed(ch.config().seed, epoch);
            ch.restart(seed);
        }
        let out = run_epoch(
            &mut self.node_a,
            &mut self.node_b,
            &mut self.channel_ab,
            &mut self.channel_ba,
            self.next_epoch,
            tap,
        )?;
        self.next_epoch += 1;
        Ok(out)
    }

    /// Runs up to `epochs` epochs, appending to `log`. Returns true when early stopping fired.
    ///
    /// On divergence the rows logged so far stay in `log`.
    pub fn train(
        &mut self,
        epochs: usize,
        early_stop: Option<(f64, usize)>,
        mut tap: Option<&mut Transcript>,
        log: &mut MetricsLog,
    ) -> Result<bool> {
        let mut streak = 0;
        for _ in 0..epochs {
            let out = self.run_epoch(tap.as_deref_mut())?;
            for r in out.rows() {
                log.push(r)?;
            }
            if let Some((threshold, patience)) = early_stop {
                streak = if out.mean_success() >= threshold { streak + 1 } else { 0 };
                if streak >= patience {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// Result of [`train_link`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub session: LinkSession,
    pub log: MetricsLog,
    pub stopped_early: bool,
}

impl TrainOutcome {
    pub fn final_success(&self, direction: Direction) -> Option<f64> {
        self.log.success_trace(Some(direction)).last().map(|&(_, s)| s)
    }
}

/// Trains a fresh link from `cfg`.
pub fn train_link(cfg: &TrainingConfig, tap: Option<&mut Transcript>) -> Result<TrainOutcome> {
    let mut session = LinkSession::new(cfg)?;
    let mut log = MetricsLog::new();
    let early = cfg
        .early_stop_threshold
        .map(|t| (t, cfg.early_stop_patience));
    let stopped_early = session.train(cfg.max_epochs, early, tap, &mut log)?;
    Ok(TrainOutcome {
        session,
        log,
        stopped_early,
    })
}
