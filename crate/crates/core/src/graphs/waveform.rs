use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{input, Result};

/// A block of complex baseband samples produced for (or received in place of) one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
}

impl Waveform {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Self { samples }
    }

    /// Builds a waveform from `(re0, im0, re1, im1, ...)`.
    pub fn from_interleaved(values: &[f64]) -> Result<Self> {
        if !values.len().is_multiple_of(2) {
            return Err(input("interleaved I/Q needs an even number of values"));
        }
        Ok(Self {
            samples: values
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
        })
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        self.samples.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn distance(&self, other: &Waveform) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Stacks waveforms of exactly `samples` complex values into a `[B x 2S]` feature tensor.
pub fn waveforms_to_features(waves: &[Waveform], samples: usize) -> Result<Tensor> {
    if waves.is_empty() {
        return Err(input("empty waveform batch"));
    }
    if let Some(w) = waves.iter().find(|w| w.len() != samples) {
        return Err(input(format!(
            "waveform has {} samples, expected {samples}",
            w.len()
        )));
    }
    let values = waves.iter().flat_map(|w| w.to_interleaved()).collect();
    Tensor::new(vec![waves.len(), 2 * samples], values)
}

/// Splits a `[B x 2S]` feature tensor back into waveforms.
pub fn features_to_waveforms(features: &Tensor) -> Vec<Waveform> {
    let cols = features.shape()[1];
    features
        .values()
        .chunks(cols)
        .map(|row| Waveform::from_interleaved(row).expect("even width"))
        .collect()
}

/// Concatenates waveforms into one contiguous sample stream.
pub fn concat_samples(waves: &[Waveform]) -> Vec<Complex64> {
    waves.iter().flat_map(|w| w.samples.iter().copied()).collect()
}

/// Cuts a sample stream into consecutive waveforms of `samples` each.
pub fn split_samples(stream: &[Complex64], samples: usize) -> Vec<Waveform> {
    stream
        .chunks(samples)
        .map(|c| Waveform::new(c.to_vec()))
        .collect()
}
