//! Deterministic in-process simulation of whole sessions.
//!
//! A session runs setup (ledgered as round 0) and then `rounds` rounds of
//! one protocol. Each round the orchestrator derives every client's trained
//! model from the master seed, lets the protocol driver move the state
//! machines through the [`Bus`], and compares the aggregate with the
//! plaintext sum of the contributing clients' models.
//!
//! Delivery is synchronous and lossless. Clients act in index order within
//! each step, so the ledger order is (round, step, sender).

mod bus;
mod config;
mod drivers;
mod ledger;
mod message;
mod report;
mod session;

pub use bus::{Bus, Delivery};
pub use config::{AccountingMode, Protocol, SessionConfig};
pub use drivers::{
    CESA_PHASE1, CESA_PHASE3, PLAIN_GLOBAL, PLAIN_INIT, PLAIN_UPLOAD, SECAGG_STEP1, SECAGG_STEP3,
    SECAGG_STEP4, SECAGG_STEP5, SECAGG_STEP6, SECAGG_STEP7, SECAGG_STEP8,
};
pub use ledger::{count_messages, DirectionFilter, MessageFilter, MessageLedger, Tally};
pub use message::{Direction, Party, Payload, PayloadKind, ProtocolMessage};
pub use report::{RoundCounts, RoundVerdict, SessionReport, Verdict};
pub use session::{derive_seed, run_session, session_offset, SessionRun};

use thiserror::Error;

use crate::cesa::CesaError;
use crate::crypto::CryptoError;
use crate::secagg::SecAggError;

/// Failure inside a round. Reported as an aborted verdict.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("secagg: {0}")]
    SecAgg(#[from] SecAggError),
    #[error("cesa: {0}")]
    Cesa(#[from] CesaError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("unexpected {kind:?} payload at {step}")]
    UnexpectedPayload {
        step: &'static str,
        kind: PayloadKind,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("session setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Cesa(#[from] CesaError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}
