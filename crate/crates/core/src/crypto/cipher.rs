//! XOR stream cipher over the SplitMix64 keystream.
//!
//! Confidentiality against an honest-but-curious server only: there is no
//! authentication tag, and integrity is checked by the caller's plaintext
//! header.

use super::prg::{keystream, PrgSeed};

pub fn stream_encrypt(seed: PrgSeed, plaintext: &[u8]) -> Vec<u8> {
    let ks = keystream(seed, plaintext.len());
    plaintext.iter().zip(ks).map(|(m, k)| m ^ k).collect()
}

pub fn stream_decrypt(seed: PrgSeed, ciphertext: &[u8]) -> Vec<u8> {
    stream_encrypt(seed, ciphertext)
}
