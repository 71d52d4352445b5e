use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::node::Node;
use super::train::derive_seed;
use crate::channel::{Channel, ChannelConfig, ChannelKind};
use crate::error::{input, Result};
use crate::graphs::{concat_samples, split_samples, ClassMessage};
use crate::metrics::CerEstimate;

/// Frozen-link class-error rates in both directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CerEvaluation {
    pub a_to_b: CerEstimate,
    pub b_to_a: CerEstimate,
}

impl CerEvaluation {
    pub fn pooled(&self) -> CerEstimate {
        self.a_to_b.combine(&self.b_to_a)
    }
}

/// Sends `trials` uniformly drawn classes from `tx` to `rx` and counts argmax errors.
///
/// Classes go out in bursts of N waveforms; each burst is one channel block.
pub fn evaluate_direction(
    tx: &Node,
    rx: &Node,
    channel: &mut Channel,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CerEstimate> {
    if trials == 0 {
        return Err(input("CER evaluation needs at least one trial"));
    }
    let arch = tx.arch();
    let (n, s) = (arch.num_classes, arch.samples_per_class);
    let mut errors = 0;
    let mut remaining = trials;
    while remaining > 0 {
        let burst = remaining.min(n);
        let classes: Vec<ClassMessage> = (0..burst)
            .map(|_| ClassMessage::new(rng.random_range(0..n), n))
            .collect::<Result<_>>()?;
        let waves = tx.transmit(&classes)?;
        let out = channel.apply(&concat_samples(&waves))?;
        let decided = rx.decide(&split_samples(&out.samples, s))?;
        errors += classes.iter().zip(&decided).filter(|(a, b)| a != b).count();
        remaining -= burst;
    }
    CerEstimate::new(errors, trials)
}

/// Class-error rate of a frozen link at `test_snr_db`. Receivers use argmax decisions only.
pub fn evaluate_cer(
    node_a: &Node,
    node_b: &Node,
    cfg_ab: &ChannelConfig,
    cfg_ba: &ChannelConfig,
    test_snr_db: f64,
    trials: usize,
    seed: u64,
) -> Result<CerEvaluation> {
    let at_snr = |cfg: &ChannelConfig, stream: u64| {
        let mut c = cfg.clone();
        if c.kind != ChannelKind::Ideal {
            c.snr_db = test_snr_db;
        }
        c.seed = derive_seed(seed ^ cfg.seed, stream);
        c
    };
    let mut ch_ab = Channel::new(at_snr(cfg_ab, 11))?;
    let mut ch_ba = Channel::new(at_snr(cfg_ba, 12))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 13));
    let a_to_b = evaluate_direction(node_a, node_b, &mut ch_ab, trials, &mut rng)?;
    let b_to_a = evaluate_direction(node_b, node_a, &mut ch_ba, trials, &mut rng)?;
    Ok(CerEvaluation { a_to_b, b_to_a })
}
