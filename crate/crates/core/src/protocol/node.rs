use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::link::NodeId;
use super::objectives::{crit_objective, rx_objective, tx_objective};
use super::schedule::EpochSchedule;
use crate::autodiff::{AdamConfig, AdamState};
use crate::error::{Error, Result};
use crate::graphs::{ArchConfig, ClassMessage, CriticNet, DecoderNet, EncoderNet, Network, Waveform};

/// Adam learning rate of each network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningRates {
    pub encoder: f64,
    pub decoder: f64,
    pub critic: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            encoder: 3e-4,
            decoder: 1e-2,
            critic: 1e-2,
        }
    }
}

/// One endpoint's complete learning state.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub shared_seed: u64,
    pub encoder: EncoderNet,
    pub decoder: DecoderNet,
    pub critic: CriticNet,
    pub encoder_opt: AdamState,
    pub decoder_opt: AdamState,
    pub critic_opt: AdamState,
}

/// What a receiver learned from one batch of scheduled transmissions.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceiverUpdate {
    pub loss: f64,
    /// Hard decisions made before the decoder step.
    pub decisions: Vec<ClassMessage>,
}

/// What a transmitter learned from the echoes of one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmitterUpdate {
    pub echo_decisions: Vec<ClassMessage>,
    pub success: Vec<bool>,
    pub loss_crit: f64,
    pub loss_tx: f64,
    /// Pre-update critic scores on the stored transmissions.
    pub critic_scores: Vec<f64>,
    /// Fraction of stored transmissions where `score > 0.5` matched the echo outcome.
    pub critic_accuracy: f64,
}

impl Node {
    pub fn new(
        id: NodeId,
        arch: ArchConfig,
        rates: LearningRates,
        shared_seed: u64,
        init_seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let encoder = EncoderNet::init(arch, &mut rng)?;
        let decoder = DecoderNet::init(arch, &mut rng)?;
        let critic = CriticNet::init(arch, &mut rng)?;
        Ok(Self::from_nets(id, shared_seed, encoder, decoder, critic, rates))
    }

    pub fn from_nets(
        id: NodeId,
        shared_seed: u64,
        encoder: EncoderNet,
        decoder: DecoderNet,
        critic: CriticNet,
        rates: LearningRates,
    ) -> Self {
        let encoder_opt =
            AdamState::new(encoder.params(), AdamConfig::with_learning_rate(rates.encoder));
        let decoder_opt =
            AdamState::new(decoder.params(), AdamConfig::with_learning_rate(rates.decoder));
        let critic_opt = AdamState::new(critic.params(), AdamConfig::with_learning_rate(rates.critic));
        Self {
            id,
            shared_seed,
            encoder,
            decoder,
            critic,
            encoder_opt,
            decoder_opt,
            critic_opt,
        }
    }

    pub fn arch(&self) -> &ArchConfig {
        self.encoder.arch()
    }

    pub fn schedule(&self, epoch: usize) -> EpochSchedule {
        EpochSchedule::derive(self.shared_seed, epoch, self.arch().num_classes)
    }

    pub fn transmit(&self, classes: &[ClassMessage]) -> Result<Vec<Waveform>> {
        self.encoder.encode_batch(classes)
    }

    pub fn decide(&self, received: &[Waveform]) -> Result<Vec<ClassMessage>> {
        let n = self.arch().num_classes;
        self.decoder
            .decide(received)?
            .into_iter()
            .map(|d| ClassMessage::new(d, n))
            .collect()
    }

    /// Trains the decoder on received samples of the known sequence with one Adam step.
    pub fn receiver_update(
        &mut self,
        received: &[Waveform],
        known: &[ClassMessage],
    ) -> Result<ReceiverUpdate> {
        let n = self.arch().num_classes;
        let (obj, decisions) = rx_objective(&self.decoder, received, known)?;
        self.decoder.params_mut().set_grads(obj.grads)?;
        self.decoder_opt.step(self.decoder.params_mut())?;
        Ok(ReceiverUpdate {
            loss: obj.loss,
            decisions: decisions
                .into_iter()
                .map(|d| ClassMessage::new(d, n))
                .collect::<Result<_>>()?,
        })
    }

    /// Labels the stored transmissions with echo agreement, steps the critic on them, then
    /// steps the encoder against the updated (frozen) critic.
    pub fn transmitter_update(
        &mut self,
        sent: &[ClassMessage],
        stored: &[Waveform],
        echoes: &[Waveform],
    ) -> Result<TransmitterUpdate> {
        if sent.len() != stored.len() || sent.len() != echoes.len() {
            return Err(Error::Internal(format!(
                "{} classes, {} stored waveforms, {} echoes",
                sent.len(),
                stored.len(),
                echoes.len()
            )));
        }
        let echo_decisions = self.decide(echoes)?;
        let success: Vec<bool> = sent.iter().zip(&echo_decisions).map(|(a, b)| a == b).collect();

        let (crit, critic_scores) = crit_objective(&self.critic, stored, sent, &success)?;
        let correct = critic_scores
            .iter()
            .zip(&success)
            .filter(|(&c, &s)| (c > 0.5) == s)
            .count();
        self.critic.params_mut().set_grads(crit.grads)?;
        self.critic_opt.step(self.critic.params_mut())?;

        let tx = tx_objective(&self.encoder, &self.critic, sent)?;
        self.encoder.params_mut().set_grads(tx.grads)?;
        self.encoder_opt.step(self.encoder.params_mut())?;

        Ok(TransmitterUpdate {
            echo_decisions,
            success,
            loss_crit: crit.loss,
            loss_tx: tx.loss,
            critic_accuracy: correct as f64 / sent.len() as f64,
            critic_scores,
        })
    }
}
