//! Two-node learned physical layer.
//!
//! Each node owns an encoder (class to waveform), a decoder (received samples to class
//! probabilities) and a critic (predicts whether a transmitted waveform will be decoded by the
//! peer). Nodes train over a simulated channel and exchange nothing but sample values: decoders
//! learn from a shared pseudorandom training sequence, transmitters learn from echoed decisions
//! through their critic.
//!
//! - [`autodiff`]: tensors, a reverse-mode tape, losses, Adam and a finite-difference checker.
//! - [`graphs`]: the encoder, decoder and critic networks and the class/waveform types.
//! - [`channel`]: ideal, AWGN, FIR-selective, narrowband and jammed channel models.
//! - [`protocol`]: nodes, the per-epoch schedule, echo passes, training and CER evaluation.
//! - [`metrics`]: metric logs, CER curves and convergence/convexity diagnostics.
//! - [`checkpoint`]: exact text checkpoints of a node.

pub mod autodiff;
pub mod channel;
pub mod checkpoint;
pub mod error;
pub mod graphs;
pub mod metrics;
pub mod protocol;

pub use error::{Error, Result};
