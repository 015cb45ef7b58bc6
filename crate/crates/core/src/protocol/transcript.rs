use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::program::ProgramGate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

/// What a message carries. These are the only server-visible fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Payload {
    /// Modes crossing the quantum channel, identified by a digest of the
    /// simulated state.
    Quantum {
        modes: Vec<usize>,
        role: String,
        backend: String,
        digest: String,
    },
    Program {
        gates: Vec<ProgramGate>,
    },
    /// Server share `B` of the gadget's shear correction.
    Share {
        b: f64,
    },
    /// Homodyne outcome of the gadget measurement.
    Outcome {
        m1: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Message {
    pub step: usize,
    pub direction: Direction,
    pub payload: Payload,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionTranscript {
    pub messages: Vec<Message>,
}

impl SessionTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, direction: Direction, payload: Payload) {
        let step = self.messages.len();
        self.messages.push(Message {
            step,
            direction,
            payload,
        });
    }

    pub fn quantum_uses(&self) -> usize {
        self.messages
            .iter()
            .filter(|m| matches!(m.payload, Payload::Quantum { .. }))
            .count()
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.messages
            .iter()
            .filter_map(|m| match m.payload {
                Payload::Outcome { m1 } => Some(m1),
                _ => None,
            })
            .collect()
    }

    pub fn shares(&self) -> Vec<f64> {
        self.messages
            .iter()
            .filter_map(|m| match m.payload {
                Payload::Share { b } => Some(b),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// SHA-256 over the little-endian bytes of `values`, hex encoded.
pub fn digest_f64s(values: impl IntoIterator<Item = f64>) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}
