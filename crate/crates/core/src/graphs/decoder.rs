use super::arch::ArchConfig;
use super::net::{NetKind, Network};
use super::waveform::{waveforms_to_features, Waveform};
use crate::autodiff::{softmax, ParamSet, Tape, Tensor, Var};
use crate::error::Result;

/// Receive chain: 2S features -> dense+tanh -> dense+tanh -> conv1d -> maxpool -> dense logits.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderNet {
    arch: ArchConfig,
    params: ParamSet,
}

/// Decoder output for a batch.
#[derive(Clone, Debug)]
pub struct Decoded {
    /// `[B x N]` raw scores.
    pub logits: Tensor,
    /// `[B x N]` softmax of `logits`.
    pub probabilities: Tensor,
}

impl Decoded {
    /// Hard decision per row; the lowest index wins ties.
    pub fn decisions(&self) -> Vec<usize> {
        argmax_rows(&self.logits)
    }
}

pub fn argmax_rows(t: &Tensor) -> Vec<usize> {
    let n = t.shape()[1];
    t.values()
        .chunks(n)
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}

impl Network for DecoderNet {
    const KIND: NetKind = NetKind::Decoder;

    fn arch(&self) -> &ArchConfig {
        &self.arch
    }

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn from_parts(arch: ArchConfig, params: ParamSet) -> Self {
        Self { arch, params }
    }
}

impl DecoderNet {
    /// Records the forward pass for `features[B x 2S]` and returns the `[B x N]` logits.
    pub fn forward(&self, tape: &mut Tape, vars: &[Var], features: Var) -> Result<Var> {
        let b = tape.value(features).shape()[0];
        let a = &self.arch;
        let h = tape.dense(features, vars[0], vars[1])?;
        let h = tape.tanh(h);
        let h = tape.dense(h, vars[2], vars[3])?;
        let h = tape.tanh(h);
        let h = tape.reshape(h, &[b, 1, a.decoder_hidden2])?;
        let h = tape.conv1d(h, vars[4], vars[5])?;
        let h = tape.maxpool1d(h, a.pool_window)?;
        let h = tape.reshape(h, &[b, a.flat_features()])?;
        tape.dense(h, vars[6], vars[7])
    }

    /// Deinterleaves the received waveforms and runs the receive chain.
    pub fn decode(&self, received: &[Waveform]) -> Result<Decoded> {
        let features = waveforms_to_features(received, self.arch.samples_per_class)?;
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let x = tape.leaf(features);
        let out = self.forward(&mut tape, &vars, x)?;
        let logits = tape.value(out).clone();
        let probabilities = softmax(&logits);
        Ok(Decoded {
            logits,
            probabilities,
        })
    }

    pub fn decide(&self, received: &[Waveform]) -> Result<Vec<usize>> {
        Ok(self.decode(received)?.decisions())
    }
}
