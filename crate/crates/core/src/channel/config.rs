use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Identity; no noise is added.
    Ideal,
    /// Flat gain with additive white Gaussian noise.
    AwgnFlat,
    /// FIR multipath followed by AWGN.
    FirSelective,
    /// Flat AWGN at a low sample rate (the rate is an annotation only).
    Narrowband,
    /// Flat AWGN plus a mandatory tone jammer.
    Jammed,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Ideal => "ideal",
            ChannelKind::AwgnFlat => "awgn_flat",
            ChannelKind::FirSelective => "fir_selective",
            ChannelKind::Narrowband => "narrowband",
            ChannelKind::Jammed => "jammed",
        }
    }
}

/// Continuous-wave interferer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jammer {
    /// Normalized frequency in cycles per sample, in `[-0.5, 0.5)`.
    pub frequency: f64,
    /// Tone power relative to the block's received signal power.
    pub power_ratio: f64,
}

/// Powerline-like multipath profile used when no taps are given.
pub fn default_plc_taps() -> Vec<Complex64> {
    vec![
        Complex64::new(0.8, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.4, 0.2),
        Complex64::new(0.0, 0.0),
        Complex64::new(-0.2, 0.0),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// Target receive SNR in dB; `+inf` disables noise.
    pub snr_db: f64,
    pub fir_taps: Vec<Complex64>,
    pub jammer: Option<Jammer>,
    /// Static carrier phase rotation applied after the linear transform.
    pub phase_offset_rad: f64,
    /// Nominal sample rate; only used to convert sample counts into air time.
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(kind: ChannelKind, snr_db: f64) -> Self {
        Self {
            kind,
            snr_db,
            fir_taps: if kind == ChannelKind::FirSelective {
                default_plc_taps()
            } else {
                Vec::new()
            },
            jammer: None,
            phase_offset_rad: 0.0,
            sample_rate_hz: if kind == ChannelKind::Narrowband {
                44_100.0
            } else {
                1e6
            },
            seed: 0,
        }
    }

    pub fn ideal() -> Self {
        Self::new(ChannelKind::Ideal, f64::INFINITY)
    }

    pub fn awgn(snr_db: f64) -> Self {
        Self::new(ChannelKind::AwgnFlat, snr_db)
    }

    pub fn fir(snr_db: f64, taps: Vec<Complex64>) -> Self {
        Self {
            fir_taps: taps,
            ..Self::new(ChannelKind::FirSelective, snr_db)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_jammer(mut self, jammer: Jammer) -> Self {
        self.jammer = Some(jammer);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(config(format!("snr_db must be finite or +inf, got {}", self.snr_db)));
        }
        match self.kind {
            ChannelKind::FirSelective => {
                if self.fir_taps.len() < 2 {
                    return Err(config("fir_selective needs at least 2 taps"));
                }
                if self.fir_taps.iter().all(|t| t.norm_sqr() == 0.0) {
                    return Err(config("fir_selective needs at least one nonzero tap"));
                }
            }
            ChannelKind::Jammed if self.jammer.is_none() => {
                return Err(config("jammed channel needs jammer settings"));
            }
            ChannelKind::Ideal if self.jammer.is_some() => {
                return Err(config("ideal channel cannot carry a jammer"));
            }
            _ => {}
        }
        if !self.fir_taps.iter().all(|t| t.re.is_finite() && t.im.is_finite()) {
            return Err(config("fir taps must be finite"));
        }
        if let Some(j) = &self.jammer {
            if !(-0.5..0.5).contains(&j.frequency) {
                return Err(config(format!(
                    "jammer frequency {} outside [-0.5, 0.5)",
                    j.frequency
                )));
            }
            if !(j.power_ratio >= 0.0 && j.power_ratio.is_finite()) {
                return Err(config(format!(
                    "jammer power ratio must be finite and >= 0, got {}",
                    j.power_ratio
                )));
            }
        }
        if !self.phase_offset_rad.is_finite() {
            return Err(config("phase_offset_rad must be finite"));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(config("sample_rate_hz must be positive"));
        }
        Ok(())
    }
}
