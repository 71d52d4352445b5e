use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graphs::Waveform;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    A,
    B,
}

impl NodeId {
    pub fn peer(self) -> Self {
        match self {
            NodeId::A => NodeId::B,
            NodeId::B => NodeId::A,
        }
    }
}

/// Physical direction of travel over the medium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "A->B")]
    AToB,
    #[serde(rename = "B->A")]
    BToA,
}

impl Direction {
    pub fn from_to(tx: NodeId) -> Self {
        match tx {
            NodeId::A => Direction::AToB,
            NodeId::B => Direction::BToA,
        }
    }

    pub fn reverse(self) -> Self {
        match self {
            Direction::AToB => Direction::BToA,
            Direction::BToA => Direction::AToB,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::AToB => "A->B",
            Direction::BToA => "B->A",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A->B" => Some(Direction::AToB),
            "B->A" => Some(Direction::BToA),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which half of a training round a message belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    /// Transmission of a scheduled class.
    Forward,
    /// Re-encoded decision sent back to the originator.
    Echo,
}

/// Everything that crosses the medium: received sample values and nothing else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkMessage {
    pub direction: Direction,
    pub leg: Leg,
    pub epoch: usize,
    /// Position of the class in the epoch's schedule.
    pub index: usize,
    #[serde(flatten)]
    pub payload: Waveform,
}

/// Ordered record of every message exchanged in a session.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub messages: Vec<LinkMessage>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, msg: LinkMessage) {
        self.messages.push(msg);
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn filter(&self, direction: Direction, leg: Leg, epoch: usize) -> Vec<&LinkMessage> {
        self.messages
            .iter()
            .filter(|m| m.direction == direction && m.leg == leg && m.epoch == epoch)
            .collect()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for m in &self.messages {
            serde_json::to_writer(&mut w, m).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Self> {
        let messages = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(std::io::Error::from))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { messages })
    }
}
