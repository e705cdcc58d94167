//! Protocol messages and their canonical byte encoding.
//!
//! Every payload serializes as a one-byte kind tag followed by fixed-width
//! big-endian fields. Integers mod p use the byte width of p; ring elements
//! are 8 bytes; indices and counts are 4 bytes.
//!
//! | tag  | kind          | layout after the tag                                   |
//! |------|---------------|--------------------------------------------------------|
//! | 0x01 | global model  | len:u32, elems:u64*len                                 |
//! | 0x02 | public key    | slot:u8, key:[w]                                       |
//! | 0x03 | key directory | count:u32, keys_per:u8, (index:u32, key:[w]*keys_per)* |
//! | 0x04 | envelope      | round:u64, origin:u32, recipient:u32, len:u32, body    |
//! | 0x05 | masked model  | len:u32, elems:u64*len                                 |
//! | 0x06 | participants  | count:u32, index:u32*count                             |
//! | 0x07 | b-share       | origin:u32, holder:u32, value:u64                      |
//! | 0x08 | SK-share      | origin:u32, holder:u32, value:[w]                      |
//! | 0x09 | setup         | global model fields, then key directory fields         |
//! | 0x0a | plain model   | len:u32, elems:u64*len                                 |

use std::fmt;

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

use crate::crypto::{fixed_width_be, ModelVector};
use crate::secagg::CipherText;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ClientToServer,
    ServerToClient,
    ServerBroadcast,
}

impl Direction {
    pub fn from_server(self) -> bool {
        !matches!(self, Direction::ClientToServer)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::ClientToServer => "client_to_server",
            Direction::ServerToClient => "server_to_client",
            Direction::ServerBroadcast => "server_broadcast",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Server,
    Client(usize),
    /// Broadcast fan-out.
    Clients,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Server => f.write_str("server"),
            Party::Client(i) => write!(f, "client{i}"),
            Party::Clients => f.write_str("all"),
        }
    }
}

impl Serialize for Party {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    GlobalModel,
    PublicKey,
    KeyDirectory,
    Envelope,
    MaskedModel,
    Participants,
    BShare,
    SkShare,
    Setup,
    PlainModel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    GlobalModel(ModelVector),
    /// Slot 1 is the masking key (CESA's only key), slot 2 SecAgg's cipher key.
    PublicKey {
        slot: u8,
        key: BigUint,
    },
    /// (client index, that client's public keys in slot order).
    KeyDirectory(Vec<(usize, Vec<BigUint>)>),
    Envelope(CipherText),
    MaskedModel(ModelVector),
    Participants(Vec<usize>),
    BShare {
        origin: usize,
        holder: usize,
        value: u64,
    },
    SkShare {
        origin: usize,
        holder: usize,
        value: BigUint,
    },
    /// CESA Phase I: the initial model together with the key directory.
    Setup {
        model: ModelVector,
        directory: Vec<(usize, Vec<BigUint>)>,
    },
    PlainModel(ModelVector),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::GlobalModel(_) => PayloadKind::GlobalModel,
            Payload::PublicKey { .. } => PayloadKind::PublicKey,
            Payload::KeyDirectory(_) => PayloadKind::KeyDirectory,
            Payload::Envelope(_) => PayloadKind::Envelope,
            Payload::MaskedModel(_) => PayloadKind::MaskedModel,
            Payload::Participants(_) => PayloadKind::Participants,
            Payload::BShare { .. } => PayloadKind::BShare,
            Payload::SkShare { .. } => PayloadKind::SkShare,
            Payload::Setup { .. } => PayloadKind::Setup,
            Payload::PlainModel(_) => PayloadKind::PlainModel,
        }
    }

    /// Number of values carried. A model counts as one value; so does each
    /// key, ciphertext, share or index.
    pub fn value_count(&self) -> u64 {
        match self {
            Payload::KeyDirectory(d) => d.iter().map(|(_, k)| k.len() as u64).sum(),
            Payload::Participants(p) => p.len() as u64,
            Payload::Setup { directory, .. } => {
                1 + directory.iter().map(|(_, k)| k.len() as u64).sum::<u64>()
            }
            _ => 1,
        }
    }

    /// Canonical serialization; `width` is the byte width of p.
    pub fn encode(&self, width: usize) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Payload::GlobalModel(m) => {
                out.push(0x01);
                put_model(&mut out, m);
            }
            Payload::PublicKey { slot, key } => {
                out.push(0x02);
                out.push(*slot);
                out.extend(fixed_width_be(key, width));
            }
            Payload::KeyDirectory(d) => {
                out.push(0x03);
                put_directory(&mut out, d, width);
            }
            Payload::Envelope(e) => {
                out.push(0x04);
                out.extend_from_slice(&e.round.to_be_bytes());
                put_u32(&mut out, e.origin);
                put_u32(&mut out, e.recipient);
                put_u32(&mut out, e.body.len());
                out.extend_from_slice(&e.body);
            }
            Payload::MaskedModel(m) => {
                out.push(0x05);
                put_model(&mut out, m);
            }
            Payload::Participants(p) => {
                out.push(0x06);
                put_u32(&mut out, p.len());
                for &i in p {
                    put_u32(&mut out, i);
                }
            }
            Payload::BShare {
                origin,
                holder,
                value,
            } => {
                out.push(0x07);
                put_u32(&mut out, *origin);
                put_u32(&mut out, *holder);
                out.extend_from_slice(&value.to_be_bytes());
            }
            Payload::SkShare {
                origin,
                holder,
                value,
            } => {
                out.push(0x08);
                put_u32(&mut out, *origin);
                put_u32(&mut out, *holder);
                out.extend(fixed_width_be(value, width));
            }
            Payload::Setup { model, directory } => {
                out.push(0x09);
                put_model(&mut out, model);
                put_directory(&mut out, directory, width);
            }
            Payload::PlainModel(m) => {
                out.push(0x0a);
                put_model(&mut out, m);
            }
        }
        out
    }
}

fn put_u32(out: &mut Vec<u8>, x: usize) {
    let x = u32::try_from(x).expect("index fits in u32");
    out.extend_from_slice(&x.to_be_bytes());
}

fn put_model(out: &mut Vec<u8>, m: &ModelVector) {
    put_u32(out, m.len());
    for x in m.elems() {
        out.extend_from_slice(&x.to_be_bytes());
    }
}

fn put_directory(out: &mut Vec<u8>, d: &[(usize, Vec<BigUint>)], width: usize) {
    put_u32(out, d.len());
    let keys_per = d.first().map_or(0, |(_, k)| k.len());
    out.push(u8::try_from(keys_per).expect("at most 255 keys per client"));
    for (i, keys) in d {
        put_u32(out, *i);
        for k in keys {
            out.extend(fixed_width_be(k, width));
        }
    }
}

/// One ledger entry: a single transmitted message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProtocolMessage {
    pub round: u64,
    pub step: &'static str,
    pub direction: Direction,
    pub sender: Party,
    pub recipient: Party,
    pub kind: PayloadKind,
    pub values: u64,
    pub bytes: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{RingModulus, RingVector};

    #[test]
    fn golden_encodings() {
        let m = RingVector::new(RingModulus::WORD, vec![1, 0x0102]);
        assert_eq!(
            Payload::GlobalModel(m).encode(1),
            vec![1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 2]
        );
        assert_eq!(
            Payload::PublicKey {
                slot: 2,
                key: BigUint::from(0x0102u32)
            }
            .encode(4),
            vec![2, 2, 0, 0, 1, 2]
        );
        assert_eq!(
            Payload::Participants(vec![0, 3]).encode(1),
            vec![6, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 3]
        );
        assert_eq!(
            Payload::BShare {
                origin: 1,
                holder: 2,
                value: 7
            }
            .encode(1),
            vec![7, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 7]
        );
        assert_eq!(
            Payload::KeyDirectory(vec![
                (0, vec![BigUint::from(8u32)]),
                (1, vec![BigUint::from(19u32)])
            ])
            .encode(1),
            vec![3, 0, 0, 0, 2, 1, 0, 0, 0, 0, 8, 0, 0, 0, 1, 19]
        );
        let e = CipherText {
            round: 1,
            origin: 0,
            recipient: 1,
            body: vec![0xaa, 0xbb],
        };
        assert_eq!(
            Payload::Envelope(e).encode(1),
            vec![4, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 2, 0xaa, 0xbb]
        );
    }

    #[test]
    fn value_counts() {
        let dir = vec![(0, vec![BigUint::from(1u32), BigUint::from(2u32)]); 3];
        assert_eq!(Payload::KeyDirectory(dir.clone()).value_count(), 6);
        let m = RingVector::zeros(RingModulus::WORD, 4);
        assert_eq!(Payload::MaskedModel(m.clone()).value_count(), 1);
        assert_eq!(
            Payload::Setup {
                model: m,
                directory: dir
            }
            .value_count(),
            7
        );
    }

    #[test]
    fn party_names() {
        assert_eq!(Party::Client(3).to_string(), "client3");
        assert_eq!(Party::Server.to_string(), "server");
        assert_eq!(Party::Clients.to_string(), "all");
    }
}
