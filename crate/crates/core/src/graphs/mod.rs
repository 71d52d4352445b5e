//! Encoder, decoder and critic graphs plus the class and waveform types they exchange.

mod arch;
mod critic;
mod decoder;
mod encoder;
mod init;
mod message;
mod net;
mod waveform;

pub use arch::ArchConfig;
pub use critic::CriticNet;
pub use decoder::{argmax_rows, Decoded, DecoderNet};
pub use encoder::EncoderNet;
pub use init::uniform_fan_in;
pub use message::{bits_per_sample, map_bits_to_class, map_class_to_bits, ClassMessage, OneHotLabel};
pub use net::{check_layout, init_params, layout, LayerSpec, NetKind, Network};
pub use waveform::{
    concat_samples, features_to_waveforms, split_samples, waveforms_to_features, Waveform,
};
