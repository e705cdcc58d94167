//! CESA: each client masks its model with exactly two pairwise masks.
//!
//! Phase I distributes one public key per client. Phase II (once) derives
//! the masks shared with FP_i and SP_i. Phase III (every round) uploads
//! W_i + M_{i,FP_i} + M_{i,SP_i}; since M_{i,FP_i} = -M_{FP_i,i}, the server's
//! plain sum of masked models is the sum of the models.

mod client;
mod local;
mod pairs;
mod server;

pub use client::{pair_base_mask, CesaClient};
pub use local::local_round;
pub use pairs::{
    draw_offset, fp_index, max_offset, sp_index, valid_offsets, validate_offset, MIN_CLIENTS,
    MIN_OFFSET,
};
pub use server::{cesa_aggregate, force_aggregate, CesaServer};

use std::sync::Arc;

use thiserror::Error;

use crate::crypto::{CryptoError, DhParams, RingModulus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CesaError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("CESA needs at least 7 clients, got {0}")]
    TooFewClients(usize),
    #[error("offset {offset} outside [2, {max}] for {clients} clients")]
    OffsetOutOfRange {
        offset: usize,
        clients: usize,
        max: usize,
    },
    #[error("no public key for client {0}")]
    MissingPeerKey(usize),
    #[error("unknown client {0}")]
    UnknownClient(usize),
    #[error("client {0} has not derived its pair masks")]
    MasksNotDerived(usize),
    #[error("incomplete round, absent clients {absent:?}")]
    IncompleteRound { absent: Vec<usize> },
}

/// Session-wide configuration distributed in Phase I.
#[derive(Clone, Debug)]
pub struct CesaSessionParams {
    clients: usize,
    offset: usize,
    dh: Arc<DhParams>,
    model_len: usize,
    modulus: RingModulus,
    rounds: u64,
}

impl CesaSessionParams {
    pub fn new(
        clients: usize,
        offset: usize,
        dh: Arc<DhParams>,
        model_len: usize,
        modulus: RingModulus,
        rounds: u64,
    ) -> Result<Self, CesaError> {
        validate_offset(offset, clients)?;
        Ok(Self {
            clients,
            offset,
            dh,
            model_len,
            modulus,
            rounds,
        })
    }

    pub fn clients(&self) -> usize {
        self.clients
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn dh(&self) -> &DhParams {
        &self.dh
    }

    pub fn model_len(&self) -> usize {
        self.model_len
    }

    pub fn modulus(&self) -> RingModulus {
        self.modulus
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }
}
