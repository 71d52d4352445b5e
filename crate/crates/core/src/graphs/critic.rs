use super::arch::ArchConfig;
use super::message::{ClassMessage, OneHotLabel};
use super::net::{NetKind, Network};
use super::waveform::{waveforms_to_features, Waveform};
use crate::autodiff::{sigmoid, ParamSet, Tape, Var};
use crate::error::{input, Result};

/// Predicts whether a locally transmitted waveform will be decoded by the remote node.
///
/// 2S features (optionally with the one-hot class appended) -> dense+tanh -> dense+tanh -> dense -> logit.
/// The score is the sigmoid of the logit.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticNet {
    arch: ArchConfig,
    params: ParamSet,
}

impl Network for CriticNet {
    const KIND: NetKind = NetKind::Critic;

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

impl CriticNet {
    /// Records the forward pass for `features[B x 2S]` and returns `[B x 1]` logits.
    ///
    /// `classes` is required when the critic is configured to see the class.
    pub fn forward(
        &self,
        tape: &mut Tape,
        vars: &[Var],
        features: Var,
        classes: Option<&[ClassMessage]>,
    ) -> Result<Var> {
        let x = if self.arch.critic_sees_class {
            let classes =
                classes.ok_or_else(|| input("critic configured to see the class needs class ids"))?;
            let onehot = tape.leaf(OneHotLabel::batch(classes, self.arch.num_classes)?);
            tape.concat_cols(features, onehot)?
        } else {
            features
        };
        let h = tape.dense(x, vars[0], vars[1])?;
        let h = tape.tanh(h);
        let h = tape.dense(h, vars[2], vars[3])?;
        let h = tape.tanh(h);
        tape.dense(h, vars[4], vars[5])
    }

    pub fn logits(&self, waves: &[Waveform], classes: Option<&[ClassMessage]>) -> Result<Vec<f64>> {
        let features = waveforms_to_features(waves, self.arch.samples_per_class)?;
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let x = tape.leaf(features);
        let out = self.forward(&mut tape, &vars, x, classes)?;
        Ok(tape.value(out).values().to_vec())
    }

    /// Scores `C` in `(0, 1)` for each transmitted waveform.
    pub fn criticize(&self, waves: &[Waveform], classes: Option<&[ClassMessage]>) -> Result<Vec<f64>> {
        Ok(self.logits(waves, classes)?.into_iter().map(sigmoid).collect())
    }
}
