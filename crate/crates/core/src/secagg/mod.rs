//! SecAgg: double masking with additively shared unmasking material.
//!
//! Per round, each client i in C:
//!
//! 1. generates two key pairs (SK^1, PK^1) and (SK^2, PK^2) and uploads both
//!    public keys;
//! 3. receives the server's broadcast of every participant's public keys;
//! 4. draws b_i, splits b_i and SK^1_i additively over C and sends one
//!    encrypted bundle e_{i,j} per peer;
//! 5. receives the e_{j,i} the server routes to it (C_1 = senders);
//! 6. uploads W_i + M_i + sum_{j>i} M_{i,j} - sum_{j<i} M_{j,i};
//! 7. learns C_2 and reveals its b-shares of survivors (plus SK^1 shares of
//!    dropped clients);
//! 8. the server rebuilds every b_j, strips M_j and sums.
//!
//! Step (2) has no label of its own; key upload is part of step (1).

mod client;
mod local;
mod server;
mod shares;

pub use client::{
    client_keygen, individual_mask, Reveal, RevealedBShare, RevealedSkShare, SecAggClient,
};
pub use local::local_round;
pub use server::SecAggServer;
pub use shares::{
    envelope_seed, open, reconstruct_additive, seal, split_additive, CipherText, ShareBundle,
};

use num_bigint::BigUint;
use thiserror::Error;

use crate::crypto::{
    context_with, prg_expand, secret_to_seed, CryptoError, MaskVector, RingModulus, SharedSecret,
};

/// A client's two public keys as published in steps (1) and (3).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeerKeys {
    /// PK^1, used for pairwise masks.
    pub mask_public: BigUint,
    /// PK^2, used to key share envelopes.
    pub cipher_public: BigUint,
}

/// M_{i,j} for the unordered pair {i, j} sharing `secret`. The pair's
/// indices are hashed in, so two pairs that happen to agree on a secret
/// still get unrelated masks.
pub fn pairwise_mask(
    secret: &SharedSecret,
    pair: (usize, usize),
    len: usize,
    modulus: RingModulus,
) -> MaskVector {
    let (lo, hi) = (pair.0.min(pair.1), pair.0.max(pair.1));
    let ctx = context_with("pair", &[lo as u64, hi as u64]);
    prg_expand(secret_to_seed(secret, &ctx), len, modulus)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecAggError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("out-of-order event: expected {expected}, state is {found}")]
    OutOfOrder {
        expected: &'static str,
        found: &'static str,
    },
    #[error("cannot split into zero shares")]
    ZeroShareCount,
    #[error("no public key for client {0}")]
    MissingPeerKey(usize),
    #[error("client {0} is not a participant this round")]
    NotParticipant(usize),
    #[error("unknown client {0}")]
    UnknownClient(usize),
    #[error("duplicate envelope ({origin} -> {recipient})")]
    DuplicateEnvelope { origin: usize, recipient: usize },
    #[error("misaddressed envelope ({origin} -> {recipient})")]
    MisaddressedEnvelope { origin: usize, recipient: usize },
    #[error("missing envelope ({origin} -> {recipient})")]
    MissingEnvelope { origin: usize, recipient: usize },
    #[error("integrity check failed for envelope ({origin} -> {recipient})")]
    HeaderMismatch { origin: usize, recipient: usize },
    #[error("missing b-shares for clients {0:?}")]
    MissingShares(Vec<usize>),
    #[error("cannot recover pairwise masks of dropped clients {0:?}")]
    UnrecoverableDropout(Vec<usize>),
    #[error("no surviving clients to aggregate")]
    NoSurvivors,
}
