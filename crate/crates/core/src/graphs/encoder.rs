use super::arch::ArchConfig;
use super::message::ClassMessage;
use super::net::{NetKind, Network};
use super::waveform::{features_to_waveforms, Waveform};
use crate::autodiff::{ParamSet, Tape, Var};
use crate::error::Result;

/// Transmit chain: class -> embedding -> dense+tanh -> dense+tanh -> 2S interleaved I/Q values.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderNet {
    arch: ArchConfig,
    params: ParamSet,
}

impl Network for EncoderNet {
    const KIND: NetKind = NetKind::Encoder;

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

impl EncoderNet {
    /// Records the forward pass on `tape`; `vars` come from binding this net's parameters.
    ///
    /// Returns the `[B x 2S]` output features.
    pub fn forward(&self, tape: &mut Tape, vars: &[Var], classes: &[ClassMessage]) -> Result<Var> {
        let ids: Vec<usize> = classes.iter().map(|c| c.id()).collect();
        let emb = tape.embedding(vars[0], &ids)?;
        let h = tape.dense(emb, vars[1], vars[2])?;
        let h = tape.tanh(h);
        let out = tape.dense(h, vars[3], vars[4])?;
        Ok(tape.tanh(out))
    }

    pub fn encode_batch(&self, classes: &[ClassMessage]) -> Result<Vec<Waveform>> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let out = self.forward(&mut tape, &vars, classes)?;
        Ok(features_to_waveforms(tape.value(out)))
    }

    pub fn encode(&self, msg: ClassMessage) -> Result<Waveform> {
        Ok(self.encode_batch(&[msg])?.remove(0))
    }
}
