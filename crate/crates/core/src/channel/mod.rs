//! Complex-baseband channel models: the transform a transmission undergoes plus additive noise.

mod config;
mod ops;

pub use config::{default_plc_taps, ChannelConfig, ChannelKind, Jammer};
pub use ops::{awgn, fir_filter, fir_response, mean_power, measure_snr, noise_variance, tone_jammer};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Result};

/// Mutable state of one channel direction.
#[derive(Clone, Debug)]
pub struct ChannelState {
    pub rng: ChaCha8Rng,
    /// FIR memory, newest input first.
    pub fir_delay: Vec<Complex64>,
    /// Sample counter driving the jammer phase.
    pub jammer_phase: u64,
}

impl ChannelState {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            fir_delay: Vec::new(),
            jammer_phase: 0,
        }
    }
}

/// Result of pushing one block through a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelOutput {
    pub samples: Vec<Complex64>,
    /// Receive SNR of this block against the noise-free, jammer-free signal (`+inf` when noiseless).
    pub measured_snr_db: f64,
}

/// Applies the kind-specific linear transform, then the jammer, then AWGN.
///
/// Noise and jammer power are set relative to the mean power of the transformed block, so
/// `snr_db` is a receive SNR regardless of channel gain.
pub fn apply_channel(
    cfg: &ChannelConfig,
    state: &mut ChannelState,
    block: &[Complex64],
) -> Result<ChannelOutput> {
    if block.is_empty() {
        return Err(input("cannot transmit an empty block"));
    }
    if cfg.kind == ChannelKind::Ideal {
        return Ok(ChannelOutput {
            samples: block.to_vec(),
            measured_snr_db: f64::INFINITY,
        });
    }
    let mut signal = match cfg.kind {
        ChannelKind::FirSelective => fir_filter(block, &cfg.fir_taps, &mut state.fir_delay),
        _ => block.to_vec(),
    };
    if cfg.phase_offset_rad != 0.0 {
        let rot = Complex64::from_polar(1.0, cfg.phase_offset_rad);
        signal.iter_mut().for_each(|z| *z *= rot);
    }
    let power = mean_power(&signal);
    let mut rx = match &cfg.jammer {
        Some(j) => tone_jammer(&signal, j.frequency, j.power_ratio * power, &mut state.jammer_phase)?,
        None => signal.clone(),
    };
    rx = awgn(&rx, cfg.snr_db, power, &mut state.rng)?;
    let measured_snr_db = measure_snr(&signal, &rx)?;
    Ok(ChannelOutput {
        samples: rx,
        measured_snr_db,
    })
}

/// A configured channel direction together with its running state.
#[derive(Clone, Debug)]
pub struct Channel {
    config: ChannelConfig,
    state: ChannelState,
}

impl Channel {
    pub fn new(config: ChannelConfig) -> Result<Self> {
        config.validate()?;
        let state = ChannelState::new(config.seed);
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn state(&self) -> &ChannelState {
        &self.state
    }

    /// Changes settings mid-session (for example switching a jammer on) while keeping the state.
    pub fn reconfigure(&mut self, config: ChannelConfig) -> Result<()> {
        config.validate()?;
        self.config = config;
        Ok(())
    }

    /// Discards noise, filter and jammer state and starts over from `seed`.
    pub fn restart(&mut self, seed: u64) {
        self.state = ChannelState::new(seed);
    }

    pub fn apply(&mut self, block: &[Complex64]) -> Result<ChannelOutput> {
        apply_channel(&self.config, &mut self.state, block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_is_exact_identity() {
        let mut ch = Channel::new(ChannelConfig::ideal()).unwrap();
        let x = vec![Complex64::new(0.3, -0.9), Complex64::new(-1.0, 0.25)];
        let out = ch.apply(&x).unwrap();
        assert_eq!(out.samples, x);
        assert_eq!(out.measured_snr_db, f64::INFINITY);
    }

    #[test]
    fn empty_block_is_rejected() {
        let mut ch = Channel::new(ChannelConfig::awgn(10.0)).unwrap();
        assert!(ch.apply(&[]).is_err());
    }

    #[test]
    fn fir_channel_is_snr_neutral() {
        // Strong attenuation must not change the delivered SNR.
        let taps = vec![Complex64::new(0.01, 0.0), Complex64::new(0.005, 0.0)];
        let mut ch = Channel::new(ChannelConfig::fir(10.0, taps).with_seed(3)).unwrap();
        let x: Vec<Complex64> = (0..200_000)
            .map(|n| Complex64::from_polar(1.0, n as f64 * 0.7))
            .collect();
        let out = ch.apply(&x).unwrap();
        assert!((out.measured_snr_db - 10.0).abs() < 0.1, "{}", out.measured_snr_db);
    }

    #[test]
    fn static_phase_rotation() {
        let mut cfg = ChannelConfig::awgn(f64::INFINITY);
        cfg.phase_offset_rad = std::f64::consts::FRAC_PI_2;
        let mut ch = Channel::new(cfg).unwrap();
        let out = ch.apply(&[Complex64::new(1.0, 0.0)]).unwrap();
        assert!((out.samples[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }
}
