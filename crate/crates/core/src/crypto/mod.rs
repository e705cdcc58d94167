//! Key agreement, seed derivation, PRG expansion, ring vectors and the
//! share-envelope stream cipher.

mod cipher;
mod dh;
mod prg;
mod ring;
mod seed;

pub use cipher::{stream_decrypt, stream_encrypt};
pub(crate) use dh::random_below;
pub use dh::{
    derive_shared_secret, fixed_width_be, gen_keypair, DhParams, KeyPair, ParamSet, SharedSecret,
};
pub use prg::{keystream, prg_expand, PrgSeed, SplitMix64};
pub use ring::{
    vec_add, vec_neg, vec_sub, vec_sum, MaskVector, ModelVector, RingModulus, RingVector,
};
pub use seed::{context_with, integer_to_seed, secret_to_seed};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("modulus p is not prime")]
    NotPrime,
    #[error("generator must satisfy 1 < g < p")]
    InvalidGenerator,
    #[error("private key outside [1, p-1]")]
    PrivateKeyOutOfRange,
    #[error("malformed public key: not in [1, p-1]")]
    MalformedPublicKey,
    #[error("unknown parameter set `{0}`")]
    UnknownParamSet(String),
    #[error("ring modulus must be 2^k with 1 <= k <= 64, got k = {0}")]
    InvalidRingBits(u32),
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("ring modulus mismatch: 2^{left} vs 2^{right}")]
    ModulusMismatch { left: u32, right: u32 },
}
