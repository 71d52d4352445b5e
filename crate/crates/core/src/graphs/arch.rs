use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Layer sizes of the encoder, decoder and critic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    /// Number of classes N (a power of two).
    pub num_classes: usize,
    /// Complex samples per waveform S.
    pub samples_per_class: usize,
    pub embedding_dim: usize,
    pub encoder_hidden: usize,
    pub decoder_hidden1: usize,
    pub decoder_hidden2: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub pool_window: usize,
    pub critic_hidden1: usize,
    pub critic_hidden2: usize,
    /// Append the one-hot class to the critic input.
    pub critic_sees_class: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            num_classes: 256,
            samples_per_class: 8,
            embedding_dim: 32,
            encoder_hidden: 64,
            decoder_hidden1: 64,
            decoder_hidden2: 32,
            conv_filters: 8,
            conv_kernel: 3,
            pool_window: 2,
            critic_hidden1: 64,
            critic_hidden2: 32,
            critic_sees_class: false,
        }
    }
}

impl ArchConfig {
    /// Real features per waveform (interleaved I/Q).
    pub fn features(&self) -> usize {
        2 * self.samples_per_class
    }

    pub fn bits_per_class(&self) -> u32 {
        self.num_classes.trailing_zeros()
    }

    /// Conv output length before pooling.
    pub fn conv_len(&self) -> usize {
        self.decoder_hidden2 + 1 - self.conv_kernel
    }

    pub fn pooled_len(&self) -> usize {
        self.conv_len() / self.pool_window
    }

    /// Width of the flattened features entering the decoder's output layer.
    pub fn flat_features(&self) -> usize {
        self.conv_filters * self.pooled_len()
    }

    pub fn critic_inputs(&self) -> usize {
        self.features() + if self.critic_sees_class { self.num_classes } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || !self.num_classes.is_power_of_two() {
            return Err(config(format!(
                "num_classes must be a power of two >= 2, got {}",
                self.num_classes
            )));
        }
        if self.samples_per_class < 1 {
            return Err(config("samples_per_class must be at least 1"));
        }
        let widths = [
            ("embedding_dim", self.embedding_dim),
            ("encoder_hidden", self.encoder_hidden),
            ("decoder_hidden1", self.decoder_hidden1),
            ("decoder_hidden2", self.decoder_hidden2),
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
            ("pool_window", self.pool_window),
            ("critic_hidden1", self.critic_hidden1),
            ("critic_hidden2", self.critic_hidden2),
        ];
        if let Some((name, _)) = widths.iter().find(|(_, w)| *w == 0) {
            return Err(config(format!("{name} must be positive")));
        }
        if self.conv_kernel > self.decoder_hidden2 {
            return Err(config(format!(
                "conv_kernel {} exceeds decoder_hidden2 {}",
                self.conv_kernel, self.decoder_hidden2
            )));
        }
        if self.pooled_len() == 0 {
            return Err(config(format!(
                "pool_window {} leaves no pooled output from {} conv outputs",
                self.pool_window,
                self.conv_len()
            )));
        }
        Ok(())
    }
}
