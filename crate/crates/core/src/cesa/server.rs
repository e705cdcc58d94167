use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;

use super::CesaError;
use crate::crypto::{ModelVector, RingModulus, RingVector};

/// Sums one masked model per client in `0..clients`. Any absent client
/// aborts the round: the survivors' masks no longer cancel.
pub fn cesa_aggregate(
    masked: &BTreeMap<usize, ModelVector>,
    clients: usize,
    modulus: RingModulus,
    model_len: usize,
) -> Result<ModelVector, CesaError> {
    let absent: Vec<usize> = (0..clients).filter(|i| !masked.contains_key(i)).collect();
    if !absent.is_empty() {
        return Err(CesaError::IncompleteRound { absent });
    }
    if let Some(&extra) = masked.keys().find(|&&i| i >= clients) {
        return Err(CesaError::UnknownClient(extra));
    }
    force_aggregate(masked, modulus, model_len)
}

/// Sums whatever masked models arrived. With a missing client the result is
/// corrupted by the uncancelled masks of its two partners.
pub fn force_aggregate(
    masked: &BTreeMap<usize, ModelVector>,
    modulus: RingModulus,
    model_len: usize,
) -> Result<ModelVector, CesaError> {
    let mut sum = RingVector::zeros(modulus, model_len);
    for v in masked.values() {
        sum.add_assign(v)?;
    }
    Ok(sum)
}

/// Server state. It only ever holds public keys and masked models.
pub struct CesaServer {
    clients: usize,
    modulus: RingModulus,
    model_len: usize,
    force: bool,
    keys: BTreeMap<usize, BigUint>,
    masked: BTreeMap<usize, ModelVector>,
    round: u64,
}

impl CesaServer {
    /// `force` sums partial rounds instead of aborting them.
    pub fn new(clients: usize, modulus: RingModulus, model_len: usize, force: bool) -> Self {
        Self {
            clients,
            modulus,
            model_len,
            force,
            keys: BTreeMap::new(),
            masked: BTreeMap::new(),
            round: 0,
        }
    }

    /// Phase I upload.
    pub fn receive_public_key(&mut self, from: usize, key: BigUint) -> Result<(), CesaError> {
        if from >= self.clients {
            return Err(CesaError::UnknownClient(from));
        }
        self.keys.insert(from, key);
        Ok(())
    }

    /// Phase I broadcast payload, available once every key has arrived.
    pub fn key_directory(&self) -> Result<&BTreeMap<usize, BigUint>, CesaError> {
        let absent: Vec<usize> = (0..self.clients)
            .filter(|i| !self.keys.contains_key(i))
            .collect();
        if absent.is_empty() {
            Ok(&self.keys)
        } else {
            Err(CesaError::IncompleteRound { absent })
        }
    }

    pub fn begin_round(&mut self, round: u64) {
        self.round = round;
        self.masked.clear();
    }

    /// Phase III upload.
    pub fn receive_masked_model(
        &mut self,
        from: usize,
        masked: ModelVector,
    ) -> Result<(), CesaError> {
        if from >= self.clients {
            return Err(CesaError::UnknownClient(from));
        }
        self.masked.insert(from, masked);
        Ok(())
    }

    pub fn submitted(&self) -> BTreeSet<usize> {
        self.masked.keys().copied().collect()
    }

    /// Sum of this round's masked models.
    pub fn aggregate(&self) -> Result<ModelVector, CesaError> {
        if self.force {
            force_aggregate(&self.masked, self.modulus, self.model_len)
        } else {
            cesa_aggregate(&self.masked, self.clients, self.modulus, self.model_len)
        }
    }
}
