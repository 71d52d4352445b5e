//! Line-oriented text checkpoints of a node's three networks and optimizer state.
//!
//! ```text
//! deepmod-checkpoint 1
//! node A
//! shared_seed 7
//! next_epoch 200
//! arch num_classes=256 samples_per_class=8 ...
//! net encoder
//! layer embedding.table 256,32 <8192 values>
//! ...
//! adam step_count=200 learning_rate=0.0003 beta1=0.9 beta2=0.999 epsilon=0.00000001
//! m embedding.table 256,32 <values>
//! v embedding.table 256,32 <values>
//! ...
//! net decoder
//! ...
//! end
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a save/load cycle is exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::autodiff::{AdamConfig, AdamState, ParamSet, Tensor};
use crate::error::{Error, Result};
use crate::graphs::{
    check_layout, layout, ArchConfig, ClassMessage, CriticNet, DecoderNet, EncoderNet, NetKind, Network,
};
use crate::protocol::{Node, NodeId};

pub const CHECKPOINT_MAGIC: &str = "deepmod-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

const NET_ORDER: [NetKind; 3] = [NetKind::Encoder, NetKind::Decoder, NetKind::Critic];

/// A node plus the epoch at which training would resume.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeCheckpoint {
    pub node: Node,
    pub next_epoch: usize,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn arch_fields(a: &ArchConfig) -> Vec<(&'static str, String)> {
    vec![
        ("num_classes", a.num_classes.to_string()),
        ("samples_per_class", a.samples_per_class.to_string()),
        ("embedding_dim", a.embedding_dim.to_string()),
        ("encoder_hidden", a.encoder_hidden.to_string()),
        ("decoder_hidden1", a.decoder_hidden1.to_string()),
        ("decoder_hidden2", a.decoder_hidden2.to_string()),
        ("conv_filters", a.conv_filters.to_string()),
        ("conv_kernel", a.conv_kernel.to_string()),
        ("pool_window", a.pool_window.to_string()),
        ("critic_hidden1", a.critic_hidden1.to_string()),
        ("critic_hidden2", a.critic_hidden2.to_string()),
        ("critic_sees_class", a.critic_sees_class.to_string()),
    ]
}

fn parse_arch(tokens: &[&str]) -> Result<ArchConfig> {
    let mut a = ArchConfig::default();
    let mut seen = Vec::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("arch entry `{tok}` is not key=value")))?;
        let num = || {
            v.parse::<usize>()
                .map_err(|_| bad(format!("arch `{k}` has non-integer value `{v}`")))
        };
        match k {
            "num_classes" => a.num_classes = num()?,
            "samples_per_class" => a.samples_per_class = num()?,
            "embedding_dim" => a.embedding_dim = num()?,
            "encoder_hidden" => a.encoder_hidden = num()?,
            "decoder_hidden1" => a.decoder_hidden1 = num()?,
            "decoder_hidden2" => a.decoder_hidden2 = num()?,
            "conv_filters" => a.conv_filters = num()?,
            "conv_kernel" => a.conv_kernel = num()?,
            "pool_window" => a.pool_window = num()?,
            "critic_hidden1" => a.critic_hidden1 = num()?,
            "critic_hidden2" => a.critic_hidden2 = num()?,
            "critic_sees_class" => {
                a.critic_sees_class = v
                    .parse()
                    .map_err(|_| bad(format!("arch `{k}` has non-boolean value `{v}`")))?
            }
            _ => return Err(bad(format!("unknown arch key `{k}`"))),
        }
        seen.push(k);
    }
    if let Some((k, _)) = arch_fields(&a).iter().find(|(k, _)| !seen.contains(k)) {
        return Err(bad(format!("arch is missing `{k}`")));
    }
    a.validate().map_err(|e| bad(format!("invalid arch: {e}")))?;
    Ok(a)
}

fn write_tensor_line(out: &mut String, tag: &str, name: &str, t: &Tensor) {
    let shape: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
    let _ = write!(out, "{tag} {name} {}", shape.join(","));
    for v in t.values() {
        let _ = write!(out, " {v:?}");
    }
    out.push('\n');
}

fn write_net(out: &mut String, kind: NetKind, params: &ParamSet, opt: &AdamState) {
    let _ = writeln!(out, "net {}", kind.name());
    for p in params.iter() {
        write_tensor_line(out, "layer", &p.name, &p.value);
    }
    let c = opt.config;
    let _ = writeln!(
        out,
        "adam step_count={} learning_rate={:?} beta1={:?} beta2={:?} epsilon={:?}",
        opt.step_count, c.learning_rate, c.beta1, c.beta2, c.epsilon
    );
    for (p, m) in params.iter().zip(&opt.first_moment) {
        write_tensor_line(out, "m", &p.name, m);
    }
    for (p, v) in params.iter().zip(&opt.second_moment) {
        write_tensor_line(out, "v", &p.name, v);
    }
}

impl NodeCheckpoint {
    pub fn new(node: Node, next_epoch: usize) -> Self {
        Self { node, next_epoch }
    }

    pub fn to_text(&self) -> String {
        let n = &self.node;
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
        let _ = writeln!(out, "node {:?}", n.id);
        let _ = writeln!(out, "shared_seed {}", n.shared_seed);
        let _ = writeln!(out, "next_epoch {}", self.next_epoch);
        let arch: Vec<String> = arch_fields(n.arch())
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let _ = writeln!(out, "arch {}", arch.join(" "));
        write_net(&mut out, NetKind::Encoder, n.encoder.params(), &n.encoder_opt);
        write_net(&mut out, NetKind::Decoder, n.decoder.params(), &n.decoder_opt);
        write_net(&mut out, NetKind::Critic, n.critic.params(), &n.critic_opt);
        out.push_str("end\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Parser::new(text).parse()
    }
}

/// Deterministic probe: every class through the encoder, those waveforms through the decoder
/// (logits) and critic (logits). Bitwise equality of probes means identical network behaviour.
pub fn probe_outputs(node: &Node) -> Result<Vec<f64>> {
    let n = node.arch().num_classes;
    let classes = (0..n)
        .map(|c| ClassMessage::new(c, n))
        .collect::<Result<Vec<_>>>()?;
    let waves = node.encoder.encode_batch(&classes)?;
    let mut out: Vec<f64> = waves.iter().flat_map(|w| w.to_interleaved()).collect();
    out.extend(node.decoder.decode(&waves)?.logits.values());
    out.extend(node.critic.logits(&waves, Some(&classes))?);
    Ok(out)
}

/// Outcome of [`verify_round_trip`].
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTripReport {
    pub node: NodeId,
    pub next_epoch: usize,
    pub layers: usize,
    pub parameters: usize,
    pub probe_values: usize,
    /// Probe outputs agree bit for bit after load, save, reload.
    pub identical: bool,
}

/// Loads `path`, runs the probe, saves to `scratch`, reloads and compares probes bitwise.
pub fn verify_round_trip(path: &Path, scratch: &Path) -> Result<RoundTripReport> {
    let first = NodeCheckpoint::load(path)?;
    let before = probe_outputs(&first.node)?;
    first.save(scratch)?;
    let second = NodeCheckpoint::load(scratch)?;
    let after = probe_outputs(&second.node)?;
    let identical = before.len() == after.len()
        && before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits());
    let nets = [
        first.node.encoder.params(),
        first.node.decoder.params(),
        first.node.critic.params(),
    ];
    Ok(RoundTripReport {
        node: first.node.id,
        next_epoch: first.next_epoch,
        layers: nets.iter().map(|p| p.len()).sum(),
        parameters: nets.iter().map(|p| p.num_values()).sum(),
        probe_values: before.len(),
        identical,
    })
}

struct NetSection {
    params: ParamSet,
    adam: Option<(u64, AdamConfig)>,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    /// Line number of an unterminated final line, if any.
    ragged_last: Option<usize>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            ragged_last: (!text.is_empty() && !text.ends_with('\n')).then(|| text.lines().count()),
        }
    }

    fn next_line(&mut self, expect: &str) -> Result<(usize, Vec<&'a str>)> {
        let (no, line) = self
            .lines
            .next()
            .ok_or_else(|| bad(format!("file truncated: expected {expect}")))?;
        Ok((no + 1, line.split_whitespace().collect()))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (no, toks) = self.next_line(&format!("`{key}` line"))?;
        if toks.first() != Some(&key) {
            return Err(bad(format!(
                "line {no}: expected `{key}`, found `{}`",
                toks.first().unwrap_or(&"")
            )));
        }
        Ok((no, toks[1..].to_vec()))
    }

    fn parse(mut self) -> Result<NodeCheckpoint> {
        let (_, header) = self.next_line("header")?;
        if header.first() != Some(&CHECKPOINT_MAGIC) {
            return Err(bad("not a deepmod checkpoint (bad magic line)"));
        }
        let version: u32 = header
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("header has no version field"))?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!(
                "unsupported checkpoint version {version} (this build reads version {CHECKPOINT_VERSION})"
            )));
        }
        let (no, node) = self.keyed("node")?;
        let id = match node.first() {
            Some(&"A") => NodeId::A,
            Some(&"B") => NodeId::B,
            other => return Err(bad(format!("line {no}: bad node id {other:?}"))),
        };
        let (no, seed) = self.keyed("shared_seed")?;
        let shared_seed = seed
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("line {no}: bad shared_seed")))?;
        let (no, ep) = self.keyed("next_epoch")?;
        let next_epoch = ep
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("line {no}: bad next_epoch")))?;
        let (_, arch_toks) = self.keyed("arch")?;
        let arch = parse_arch(&arch_toks)?;

        let mut sections = Vec::new();
        for kind in NET_ORDER {
            sections.push(self.net(kind, &arch)?);
        }
        match self.lines.next() {
            Some((_, l)) if l.trim() == "end" => {}
            Some((no, l)) => {
                return Err(bad(format!(
                    "line {}: expected `end`, found `{}`",
                    no + 1,
                    l.split_whitespace().next().unwrap_or("")
                )))
            }
            None => return Err(bad("file truncated: missing `end` marker")),
        }

        let mut it = sections.into_iter();
        let (enc, dec, crit) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        let opt = |s: &NetSection| AdamState {
            config: s.adam.expect("checked").1,
            step_count: s.adam.expect("checked").0,
            first_moment: s.m.clone(),
            second_moment: s.v.clone(),
        };
        let (eo, dopt, co) = (opt(&enc), opt(&dec), opt(&crit));
        Ok(NodeCheckpoint {
            node: Node {
                id,
                shared_seed,
                encoder: EncoderNet::from_params(arch, enc.params)?,
                decoder: DecoderNet::from_params(arch, dec.params)?,
                critic: CriticNet::from_params(arch, crit.params)?,
                encoder_opt: eo,
                decoder_opt: dopt,
                critic_opt: co,
            },
            next_epoch,
        })
    }

    fn tensor(&self, kind: NetKind, no: usize, toks: &[&str]) -> Result<(String, Tensor)> {
        let name = toks
            .get(1)
            .ok_or_else(|| bad(format!("line {no}: net `{}` layer line has no name", kind.name())))?
            .to_string();
        let shape: Vec<usize> = toks
            .get(2)
            .ok_or_else(|| bad(format!("net `{}` layer `{name}` has no shape", kind.name())))?
            .split(',')
            .map(|d| d.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(format!("net `{}` layer `{name}` has a malformed shape", kind.name())))?;
        if self.ragged_last == Some(no) {
            return Err(bad(format!(
                "file truncated inside net `{}` layer `{name}`",
                kind.name()
            )));
        }
        let values: Vec<f64> = toks[3..]
            .iter()
            .map(|v| v.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(format!("net `{}` layer `{name}` has a non-numeric value", kind.name())))?;
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(bad(format!(
                "net `{}` layer `{name}`: expected {expected} values, found {} (truncated?)",
                kind.name(),
                values.len()
            )));
        }
        let t = Tensor::new(shape, values)
            .map_err(|e| bad(format!("net `{}` layer `{name}`: {e}", kind.name())))?;
        Ok((name, t))
    }

    fn net(&mut self, kind: NetKind, arch: &ArchConfig) -> Result<NetSection> {
        let expected = layout(kind, arch);
        match self.lines.next() {
            Some((no, l)) => {
                let toks: Vec<&str> = l.split_whitespace().collect();
                if toks.as_slice() != ["net", kind.name()] {
                    return Err(bad(format!(
                        "line {}: expected `net {}`, found `{}`",
                        no + 1,
                        kind.name(),
                        l.chars().take(40).collect::<String>()
                    )));
                }
            }
            None => return Err(bad(format!("file truncated: missing net `{}`", kind.name()))),
        }
        let mut section = NetSection {
            params: ParamSet::new(),
            adam: None,
            m: Vec::new(),
            v: Vec::new(),
        };
        while let Some(&(no, line)) = self.lines.peek() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.first().copied() {
                Some("layer") if section.adam.is_none() => {
                    self.lines.next();
                    let (name, t) = self.tensor(kind, no + 1, &toks)?;
                    section
                        .params
                        .insert(name, t)
                        .map_err(|e| bad(format!("net `{}`: {e}", kind.name())))?;
                }
                Some("adam") if section.adam.is_none() => {
                    self.lines.next();
                    // all layers must be present before optimizer state
                    check_layout(kind, arch, &section.params)?;
                    section.adam = Some(parse_adam(kind, &toks[1..])?);
                }
                Some(tag @ ("m" | "v")) if section.adam.is_some() => {
                    self.lines.next();
                    let (name, t) = self.tensor(kind, no + 1, &toks)?;
                    let list = if tag == "m" { &mut section.m } else { &mut section.v };
                    let spec = expected.get(list.len()).ok_or_else(|| {
                        bad(format!("net `{}` has extra `{tag}` line `{name}`", kind.name()))
                    })?;
                    if spec.name != name || spec.shape != t.shape() {
                        return Err(bad(format!(
                            "net `{}`: optimizer `{tag}` entry `{name}` does not match layer `{}`",
                            kind.name(),
                            spec.name
                        )));
                    }
                    list.push(t);
                }
                _ => break,
            }
        }
        check_layout(kind, arch, &section.params)?;
        if section.adam.is_none() {
            return Err(bad(format!("net `{}` is missing its `adam` line", kind.name())));
        }
        for (tag, list) in [("m", &section.m), ("v", &section.v)] {
            if list.len() != expected.len() {
                return Err(bad(format!(
                    "net `{}` is missing optimizer `{tag}` for layer `{}`",
                    kind.name(),
                    expected[list.len()].name
                )));
            }
        }
        Ok(section)
    }
}

fn parse_adam(kind: NetKind, toks: &[&str]) -> Result<(u64, AdamConfig)> {
    let mut step = None;
    let mut c = AdamConfig::default();
    for tok in toks {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("net `{}` adam entry `{tok}` malformed", kind.name())))?;
        let f = || {
            v.parse::<f64>()
                .map_err(|_| bad(format!("net `{}` adam `{k}` not a number", kind.name())))
        };
        match k {
            "step_count" => {
                step = Some(v.parse::<u64>().map_err(|_| {
                    bad(format!("net `{}` adam step_count not an integer", kind.name()))
                })?)
            }
            "learning_rate" => c.learning_rate = f()?,
            "beta1" => c.beta1 = f()?,
            "beta2" => c.beta2 = f()?,
            "epsilon" => c.epsilon = f()?,
            _ => return Err(bad(format!("net `{}` unknown adam key `{k}`", kind.name()))),
        }
    }
    let step = step.ok_or_else(|| bad(format!("net `{}` adam has no step_count", kind.name())))?;
    Ok((step, c))
}
