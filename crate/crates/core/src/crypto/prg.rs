//! SplitMix64 expansion of seeds into mask vectors and keystreams.
//!
//! The stream layout is normative: output k of a vector is the (k+1)-th
//! SplitMix64 output reduced mod R, and keystream bytes are successive
//! outputs serialized big-endian.

use serde::{Deserialize, Serialize};

use super::ring::{MaskVector, RingModulus, RingVector};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64-bit seed for the PRG.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrgSeed(pub u64);

/// SplitMix64 generator (Steele, Lea, Flood).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: PrgSeed) -> Self {
        Self { state: seed.0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

impl Iterator for SplitMix64 {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        Some(self.next_u64())
    }
}

/// Expands `seed` into a length-`length` vector over Z_R.
pub fn prg_expand(seed: PrgSeed, length: usize, modulus: RingModulus) -> MaskVector {
    RingVector::new(modulus, SplitMix64::new(seed).take(length).collect())
}

/// First `len` bytes of the big-endian serialized SplitMix64 stream.
pub fn keystream(seed: PrgSeed, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 8);
    let mut rng = SplitMix64::new(seed);
    while out.len() < len {
        out.extend_from_slice(&rng.next_u64().to_be_bytes());
    }
    out.truncate(len);
    out
}
