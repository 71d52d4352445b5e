use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arch::ArchConfig;
use super::init::uniform_fan_in;
use crate::autodiff::ParamSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Encoder,
    Decoder,
    Critic,
}

impl NetKind {
    pub fn name(self) -> &'static str {
        match self {
            NetKind::Encoder => "encoder",
            NetKind::Decoder => "decoder",
            NetKind::Critic => "critic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "encoder" => Some(NetKind::Encoder),
            "decoder" => Some(NetKind::Decoder),
            "critic" => Some(NetKind::Critic),
            _ => None,
        }
    }
}

/// Name, shape and fan-in of one parameter tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub fan_in: usize,
}

fn spec(name: &'static str, shape: Vec<usize>, fan_in: usize) -> LayerSpec {
    LayerSpec { name, shape, fan_in }
}

/// Parameter layout of `kind` under `arch`, in binding order.
pub fn layout(kind: NetKind, arch: &ArchConfig) -> Vec<LayerSpec> {
    let f = arch.features();
    match kind {
        NetKind::Encoder => {
            let (n, e, h) = (arch.num_classes, arch.embedding_dim, arch.encoder_hidden);
            vec![
                // one-hot input: a single active input per row
                spec("embedding.table", vec![n, e], 1),
                spec("dense1.weights", vec![e, h], e),
                spec("dense1.bias", vec![h], e),
                spec("dense2.weights", vec![h, f], h),
                spec("dense2.bias", vec![f], h),
            ]
        }
        NetKind::Decoder => {
            let (d1, d2) = (arch.decoder_hidden1, arch.decoder_hidden2);
            let (nf, k) = (arch.conv_filters, arch.conv_kernel);
            let flat = arch.flat_features();
            vec![
                spec("dense1.weights", vec![f, d1], f),
                spec("dense1.bias", vec![d1], f),
                spec("dense2.weights", vec![d1, d2], d1),
                spec("dense2.bias", vec![d2], d1),
                spec("conv.kernels", vec![nf, 1, k], k),
                spec("conv.bias", vec![nf], k),
                spec("output.weights", vec![flat, arch.num_classes], flat),
                spec("output.bias", vec![arch.num_classes], flat),
            ]
        }
        NetKind::Critic => {
            let ci = arch.critic_inputs();
            let (h1, h2) = (arch.critic_hidden1, arch.critic_hidden2);
            vec![
                spec("dense1.weights", vec![ci, h1], ci),
                spec("dense1.bias", vec![h1], ci),
                spec("dense2.weights", vec![h1, h2], h1),
                spec("dense2.bias", vec![h2], h1),
                spec("output.weights", vec![h2, 1], h2),
                spec("output.bias", vec![1], h2),
            ]
        }
    }
}

/// Draws fresh parameters for `kind`.
pub fn init_params<R: Rng + ?Sized>(kind: NetKind, arch: &ArchConfig, rng: &mut R) -> ParamSet {
    let mut params = ParamSet::new();
    for l in layout(kind, arch) {
        params
            .insert(l.name, uniform_fan_in(&l.shape, l.fan_in, rng))
            .expect("layout names are unique");
    }
    params
}

/// Checks that `params` holds exactly the layers of `kind`, in order and with matching shapes.
pub fn check_layout(kind: NetKind, arch: &ArchConfig, params: &ParamSet) -> Result<()> {
    let expected = layout(kind, arch);
    for (i, l) in expected.iter().enumerate() {
        let Some(p) = params.iter().nth(i) else {
            return Err(Error::Checkpoint(format!(
                "net `{}` is missing layer `{}`",
                kind.name(),
                l.name
            )));
        };
        if p.name != l.name {
            return Err(Error::Checkpoint(format!(
                "net `{}` layer {i}: expected `{}`, found `{}`",
                kind.name(),
                l.name,
                p.name
            )));
        }
        if p.value.shape() != l.shape.as_slice() {
            return Err(Error::Checkpoint(format!(
                "net `{}` layer `{}`: expected shape {:?}, found {:?}",
                kind.name(),
                l.name,
                l.shape,
                p.value.shape()
            )));
        }
    }
    if params.len() > expected.len() {
        let extra = params.iter().nth(expected.len()).map(|p| p.name.clone());
        return Err(Error::Checkpoint(format!(
            "net `{}` has unexpected layer `{}`",
            kind.name(),
            extra.unwrap_or_default()
        )));
    }
    Ok(())
}

/// Common surface of the three graphs.
pub trait Network: Sized {
    const KIND: NetKind;

    fn arch(&self) -> &ArchConfig;
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;
    /// Wraps already-validated parameters.
    fn from_parts(arch: ArchConfig, params: ParamSet) -> Self;

    fn init<R: Rng + ?Sized>(arch: ArchConfig, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let params = init_params(Self::KIND, &arch, rng);
        Ok(Self::from_parts(arch, params))
    }

    fn from_params(arch: ArchConfig, params: ParamSet) -> Result<Self> {
        arch.validate()?;
        check_layout(Self::KIND, &arch, &params)?;
        Ok(Self::from_parts(arch, params))
    }
}
