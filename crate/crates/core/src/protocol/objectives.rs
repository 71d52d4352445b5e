//! The three per-node objectives and their gradients.
//!
//! Each function differentiates only with respect to the parameters of the network it trains;
//! everything else enters as a constant.

use crate::autodiff::{
    binary_cross_entropy_batch, sigmoid, softmax_cross_entropy, Tape, Tensor,
};
use crate::error::Result;
use crate::graphs::{
    argmax_rows, waveforms_to_features, ClassMessage, CriticNet, DecoderNet, EncoderNet,
    Network, OneHotLabel, Waveform,
};

/// Loss value and one gradient tensor per parameter of the trained network.
#[derive(Clone, Debug)]
pub struct Objective {
    pub loss: f64,
    pub grads: Vec<Tensor>,
}

/// Receiver loss: mean cross-entropy of the decoder on received samples against the known classes.
///
/// Also returns the decoder's hard decisions for the same forward pass.
pub fn rx_objective(
    decoder: &DecoderNet,
    received: &[Waveform],
    known: &[ClassMessage],
) -> Result<(Objective, Vec<usize>)> {
    let arch = decoder.arch();
    let labels = OneHotLabel::batch(known, arch.num_classes)?;
    let features = waveforms_to_features(received, arch.samples_per_class)?;
    let mut tape = Tape::new();
    let vars = decoder.params().bind(&mut tape);
    let x = tape.leaf(features);
    let logits = decoder.forward(&mut tape, &vars, x)?;
    let (loss, seed) = softmax_cross_entropy(tape.value(logits), &labels)?;
    let decisions = argmax_rows(tape.value(logits));
    let grads = tape.backward(logits, seed)?;
    Ok((
        Objective {
            loss,
            grads: decoder.params().gradients_of(&grads, &vars),
        },
        decisions,
    ))
}

/// Critic loss: binary cross-entropy of the critic's score on the stored transmissions against
/// the echo outcomes (`true` where the echo came back as the class that was sent).
///
/// Also returns the pre-update scores.
pub fn crit_objective(
    critic: &CriticNet,
    transmitted: &[Waveform],
    classes: &[ClassMessage],
    echo_success: &[bool],
) -> Result<(Objective, Vec<f64>)> {
    let features = waveforms_to_features(transmitted, critic.arch().samples_per_class)?;
    let mut tape = Tape::new();
    let vars = critic.params().bind(&mut tape);
    let x = tape.leaf(features);
    let logits = critic.forward(&mut tape, &vars, x, Some(classes))?;
    let (loss, seed) = binary_cross_entropy_batch(tape.value(logits), echo_success)?;
    let scores = tape.value(logits).values().iter().map(|&l| sigmoid(l)).collect();
    let grads = tape.backward(logits, seed)?;
    Ok((
        Objective {
            loss,
            grads: critic.params().gradients_of(&grads, &vars),
        },
        scores,
    ))
}

/// Transmitter loss: mean `-ln C` of the critic's score on freshly encoded `classes`.
///
/// The critic is evaluated as a fixed function; only encoder gradients are returned.
pub fn tx_objective(
    encoder: &EncoderNet,
    critic: &CriticNet,
    classes: &[ClassMessage],
) -> Result<Objective> {
    let mut tape = Tape::new();
    let enc_vars = encoder.params().bind(&mut tape);
    let crit_vars = critic.params().bind(&mut tape);
    let wave = encoder.forward(&mut tape, &enc_vars, classes)?;
    let logits = critic.forward(&mut tape, &crit_vars, wave, Some(classes))?;
    let targets = vec![true; classes.len()];
    let (loss, seed) = binary_cross_entropy_batch(tape.value(logits), &targets)?;
    let grads = tape.backward(logits, seed)?;
    Ok(Objective {
        loss,
        grads: encoder.params().gradients_of(&grads, &enc_vars),
    })
}

/// Mean `-ln C` over `waves` and its gradient with respect to the `[B x 2S]` waveform features.
pub fn critic_input_gradient(
    critic: &CriticNet,
    waves: &[Waveform],
    classes: Option<&[ClassMessage]>,
) -> Result<(f64, Tensor)> {
    let features = waveforms_to_features(waves, critic.arch().samples_per_class)?;
    let mut tape = Tape::new();
    let vars = critic.params().bind(&mut tape);
    let x = tape.leaf(features);
    let logits = critic.forward(&mut tape, &vars, x, classes)?;
    let targets = vec![true; waves.len()];
    let (loss, seed) = binary_cross_entropy_batch(tape.value(logits), &targets)?;
    let grads = tape.backward(logits, seed)?;
    let g = grads
        .get(x)
        .cloned()
        .unwrap_or_else(|| Tensor::zeros(tape.value(x).shape()));
    Ok((loss, g))
}
