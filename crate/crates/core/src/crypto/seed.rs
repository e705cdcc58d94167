//! Hashing key-agreement outputs (and other integers) into PRG seeds.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use super::dh::SharedSecret;
use super::prg::PrgSeed;

/// SHA-256 over the minimal big-endian encoding of `value` followed by
/// `context`; the first 8 digest bytes, read big-endian, form the seed.
/// Zero encodes as the single byte 0x00.
pub fn integer_to_seed(value: &BigUint, context: &[u8]) -> PrgSeed {
    let mut hasher = Sha256::new();
    hasher.update(value.to_bytes_be());
    hasher.update(context);
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    PrgSeed(u64::from_be_bytes(head))
}

pub fn secret_to_seed(secret: &SharedSecret, context: &[u8]) -> PrgSeed {
    integer_to_seed(secret.value(), context)
}

/// Builds a context string: a label followed by fixed-width big-endian
/// 64-bit fields.
pub fn context_with(label: &str, fields: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(label.len() + 8 * fields.len());
    out.extend_from_slice(label.as_bytes());
    for f in fields {
        out.extend_from_slice(&f.to_be_bytes());
    }
    out
}
