use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::cesa::{validate_offset, MIN_CLIENTS};
use crate::crypto::{ParamSet, RingModulus};

use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    SecAgg,
    Cesa,
    /// Vanilla FL: unmasked uploads. Baseline and correctness reference.
    Plain,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::SecAgg => "secagg",
            Protocol::Cesa => "cesa",
            Protocol::Plain => "plain",
        }
    }

    /// Smallest client count the protocol accepts.
    pub fn min_clients(self) -> usize {
        match self {
            Protocol::Cesa => MIN_CLIENTS,
            Protocol::SecAgg | Protocol::Plain => 1,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "secagg" => Ok(Protocol::SecAgg),
            "cesa" => Ok(Protocol::Cesa),
            "plain" => Ok(Protocol::Plain),
            other => Err(SimError::InvalidConfig(format!(
                "unknown protocol `{other}`"
            ))),
        }
    }
}

/// `Paper` counts one message per scalar or ciphertext and one per
/// broadcast; `Bytes` additionally reports canonical serialized sizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum AccountingMode {
    #[default]
    Paper,
    Bytes,
}

impl fmt::Display for AccountingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccountingMode::Paper => "paper",
            AccountingMode::Bytes => "bytes",
        })
    }
}

impl FromStr for AccountingMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "paper" => Ok(AccountingMode::Paper),
            "bytes" => Ok(AccountingMode::Bytes),
            other => Err(SimError::InvalidConfig(format!(
                "unknown accounting mode `{other}`"
            ))),
        }
    }
}

/// Everything that determines a run. Identical configs give identical
/// ledgers and reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionConfig {
    pub protocol: Protocol,
    pub clients: usize,
    pub rounds: u64,
    pub model_len: usize,
    pub ring_bits: u32,
    pub params: ParamSet,
    pub seed: u64,
    /// CESA pairing offset; drawn from the seed when `None`.
    pub offset: Option<usize>,
    /// (round, client): the client sends nothing from that round's
    /// masked-model step on. It rejoins the next round.
    pub dropouts: BTreeSet<(u64, usize)>,
    pub mode: AccountingMode,
    /// SecAgg: strip dropped clients' pairwise masks from the aggregate.
    pub secagg_recovery: bool,
    /// CESA: sum partial rounds instead of aborting them.
    pub cesa_force: bool,
    /// (round, client): flip one bit of that client's masked model in
    /// transit. Fault injection for the verifier.
    pub tamper: BTreeSet<(u64, usize)>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Cesa,
            clients: 10,
            rounds: 100,
            model_len: 8,
            ring_bits: 64,
            params: ParamSet::Toy,
            seed: 0,
            offset: None,
            dropouts: BTreeSet::new(),
            mode: AccountingMode::Paper,
            secagg_recovery: true,
            cesa_force: false,
            tamper: BTreeSet::new(),
        }
    }
}

impl SessionConfig {
    pub fn new(protocol: Protocol, clients: usize, rounds: u64) -> Self {
        Self {
            protocol,
            clients,
            rounds,
            ..Self::default()
        }
    }

    pub fn modulus(&self) -> Result<RingModulus, SimError> {
        RingModulus::new(self.ring_bits).map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.clients < self.protocol.min_clients() {
            return invalid(format!(
                "{} needs at least {} clients, got {}",
                self.protocol,
                self.protocol.min_clients(),
                self.clients
            ));
        }
        self.modulus()?;
        if self.protocol == Protocol::Cesa {
            if let Some(offset) = self.offset {
                validate_offset(offset, self.clients)
                    .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            }
        }
        for &(round, client) in self.dropouts.iter().chain(&self.tamper) {
            if round == 0 || round > self.rounds {
                return invalid(format!(
                    "fault scheduled for round {round}, outside 1..={}",
                    self.rounds
                ));
            }
            if client >= self.clients {
                return invalid(format!(
                    "fault scheduled for client {client}, only {} clients",
                    self.clients
                ));
            }
        }
        Ok(())
    }
}
