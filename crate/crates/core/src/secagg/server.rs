use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigUint;

use super::client::{individual_mask, Reveal};
use super::shares::{reconstruct_additive, CipherText};
use super::{pairwise_mask, PeerKeys, SecAggError};
use crate::crypto::{
    derive_shared_secret, CryptoError, DhParams, MaskVector, ModelVector, RingModulus, RingVector,
};

/// Server side of one SecAgg round. Events are applied one at a time.
pub struct SecAggServer {
    params: Arc<DhParams>,
    modulus: RingModulus,
    model_len: usize,
    recover_dropouts: bool,
    round: u64,
    participants: BTreeSet<usize>,
    keys: BTreeMap<usize, PeerKeys>,
    envelopes: BTreeMap<(usize, usize), CipherText>,
    c1: Option<BTreeSet<usize>>,
    c2: Option<BTreeSet<usize>>,
    masked: BTreeMap<usize, ModelVector>,
    /// origin -> holder -> b_{origin,holder}
    b_shares: BTreeMap<usize, BTreeMap<usize, u64>>,
    /// origin -> holder -> SK^1_{origin,holder}
    sk_shares: BTreeMap<usize, BTreeMap<usize, BigUint>>,
}

impl SecAggServer {
    pub fn new(
        params: Arc<DhParams>,
        modulus: RingModulus,
        model_len: usize,
        recover_dropouts: bool,
    ) -> Self {
        Self {
            params,
            modulus,
            model_len,
            recover_dropouts,
            round: 0,
            participants: BTreeSet::new(),
            keys: BTreeMap::new(),
            envelopes: BTreeMap::new(),
            c1: None,
            c2: None,
            masked: BTreeMap::new(),
            b_shares: BTreeMap::new(),
            sk_shares: BTreeMap::new(),
        }
    }

    /// Resets per-round state. `participants` is C for this round.
    pub fn begin_round(&mut self, round: u64, participants: BTreeSet<usize>) {
        self.round = round;
        self.participants = participants;
        self.keys.clear();
        self.envelopes.clear();
        self.c1 = None;
        self.c2 = None;
        self.masked.clear();
        self.b_shares.clear();
        self.sk_shares.clear();
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn participants(&self) -> &BTreeSet<usize> {
        &self.participants
    }

    pub fn c1(&self) -> Option<&BTreeSet<usize>> {
        self.c1.as_ref()
    }

    pub fn c2(&self) -> Option<&BTreeSet<usize>> {
        self.c2.as_ref()
    }

    fn check_member(&self, client: usize) -> Result<(), SecAggError> {
        if self.participants.contains(&client) {
            Ok(())
        } else {
            Err(SecAggError::UnknownClient(client))
        }
    }

    /// Step (1) upload: a client's two public keys.
    pub fn receive_public_keys(&mut self, from: usize, keys: PeerKeys) -> Result<(), SecAggError> {
        self.check_member(from)?;
        self.keys.insert(from, keys);
        Ok(())
    }

    /// Step (3) payload: every collected key pair.
    pub fn key_directory(&self) -> &BTreeMap<usize, PeerKeys> {
        &self.keys
    }

    /// Step (4) upload: the envelopes e_{from,j}.
    pub fn receive_envelopes(
        &mut self,
        from: usize,
        envelopes: Vec<CipherText>,
    ) -> Result<(), SecAggError> {
        self.check_member(from)?;
        if self.c1.is_some() {
            return Err(SecAggError::OutOfOrder {
                expected: "envelope collection (step 4)",
                found: "routing done (step 5)",
            });
        }
        for e in envelopes {
            if e.origin != from || e.round != self.round {
                return Err(SecAggError::MisaddressedEnvelope {
                    origin: e.origin,
                    recipient: e.recipient,
                });
            }
            let key = (e.origin, e.recipient);
            if self.envelopes.contains_key(&key) {
                return Err(SecAggError::DuplicateEnvelope {
                    origin: key.0,
                    recipient: key.1,
                });
            }
            self.envelopes.insert(key, e);
        }
        Ok(())
    }

    /// Step (5): fixes C_1 as the set of clients that sent envelopes (a lone
    /// participant counts even though it has nothing to send) and schedules
    /// each e_{i,j} between members of C_1 for delivery to j.
    pub fn route(&mut self) -> Result<BTreeMap<usize, Vec<CipherText>>, SecAggError> {
        if self.c1.is_some() {
            return Err(SecAggError::OutOfOrder {
                expected: "envelope collection (step 4)",
                found: "routing done (step 5)",
            });
        }
        let mut c1: BTreeSet<usize> = self.envelopes.keys().map(|&(i, _)| i).collect();
        if self.participants.len() == 1 {
            c1.extend(self.participants.iter().copied());
        }
        let mut plan: BTreeMap<usize, Vec<CipherText>> =
            c1.iter().map(|&j| (j, Vec::new())).collect();
        for ((i, j), e) in &self.envelopes {
            if c1.contains(i) {
                if let Some(inbox) = plan.get_mut(j) {
                    inbox.push(e.clone());
                }
            }
        }
        self.c1 = Some(c1);
        Ok(plan)
    }

    /// Step (6) upload.
    pub fn receive_masked_model(
        &mut self,
        from: usize,
        masked: ModelVector,
    ) -> Result<(), SecAggError> {
        let c1 = self.c1.as_ref().ok_or(SecAggError::OutOfOrder {
            expected: "routing done (step 5)",
            found: "envelope collection (step 4)",
        })?;
        if !c1.contains(&from) {
            return Err(SecAggError::UnknownClient(from));
        }
        if masked.len() != self.model_len || masked.modulus() != self.modulus {
            return Err(SecAggError::Crypto(CryptoError::LengthMismatch {
                left: masked.len(),
                right: self.model_len,
            }));
        }
        self.masked.insert(from, masked);
        Ok(())
    }

    /// Step (7): C_2 is the set of C_1 members whose masked model arrived.
    pub fn fix_survivors(&mut self) -> Result<BTreeSet<usize>, SecAggError> {
        if self.c1.is_none() {
            return Err(SecAggError::OutOfOrder {
                expected: "routing done (step 5)",
                found: "envelope collection (step 4)",
            });
        }
        let c2: BTreeSet<usize> = self.masked.keys().copied().collect();
        self.c2 = Some(c2.clone());
        Ok(c2)
    }

    /// Step (7) upload: the shares a survivor reveals.
    pub fn receive_reveal(&mut self, from: usize, reveal: Reveal) -> Result<(), SecAggError> {
        let c2 = self.c2.as_ref().ok_or(SecAggError::OutOfOrder {
            expected: "survivors fixed (step 7)",
            found: "masked model collection (step 6)",
        })?;
        if !c2.contains(&from) {
            return Err(SecAggError::UnknownClient(from));
        }
        for s in reveal.b_shares {
            self.b_shares
                .entry(s.origin)
                .or_default()
                .insert(s.holder, s.value);
        }
        for s in reveal.sk_shares {
            self.sk_shares
                .entry(s.origin)
                .or_default()
                .insert(s.holder, s.value);
        }
        Ok(())
    }

    fn reconstruct_b(&self, origin: usize) -> Option<u64> {
        let shares = self.b_shares.get(&origin)?;
        let mut total = 0u64;
        for holder in &self.participants {
            total = self.modulus.add(total, *shares.get(holder)?);
        }
        Some(total)
    }

    /// Step (8): sum of masked models over C_2 minus each reconstructed M_j.
    /// When C_2 is smaller than C_1 and recovery is enabled, the dropped
    /// clients' pairwise masks are removed as well; with recovery disabled
    /// the result still carries them.
    pub fn aggregate(&self) -> Result<ModelVector, SecAggError> {
        let c1 = self.c1.as_ref().ok_or(SecAggError::OutOfOrder {
            expected: "survivors fixed (step 7)",
            found: "envelope collection (step 4)",
        })?;
        let c2 = self.c2.as_ref().ok_or(SecAggError::OutOfOrder {
            expected: "survivors fixed (step 7)",
            found: "masked model collection (step 6)",
        })?;
        if c2.is_empty() {
            return Err(SecAggError::NoSurvivors);
        }

        let mut individual = BTreeMap::new();
        let mut incomplete = Vec::new();
        for &j in c2 {
            match self.reconstruct_b(j) {
                Some(b) => {
                    individual.insert(j, b);
                }
                None => incomplete.push(j),
            }
        }
        if !incomplete.is_empty() {
            return Err(SecAggError::MissingShares(incomplete));
        }

        let mut sum = RingVector::zeros(self.modulus, self.model_len);
        for (j, masked) in &self.masked {
            if c2.contains(j) {
                sum.add_assign(masked)?;
                sum.sub_assign(&individual_mask(
                    individual[j],
                    self.model_len,
                    self.modulus,
                ))?;
            }
        }

        let dropped: BTreeSet<usize> = c1.difference(c2).copied().collect();
        if self.recover_dropouts && !dropped.is_empty() {
            let correction = self.recover_dropout_pairwise_masks(&dropped)?;
            sum.sub_assign(&correction)?;
        }
        Ok(sum)
    }

    /// Reconstructs SK^1_j of every dropped client j from the survivors'
    /// shares and returns the net pairwise-mask term those survivors still
    /// carry: +M for pairs where j is above the survivor, -M where below.
    pub fn recover_dropout_pairwise_masks(
        &self,
        dropped: &BTreeSet<usize>,
    ) -> Result<MaskVector, SecAggError> {
        let c2 = self.c2.as_ref().ok_or(SecAggError::OutOfOrder {
            expected: "survivors fixed (step 7)",
            found: "masked model collection (step 6)",
        })?;
        let mut correction = RingVector::zeros(self.modulus, self.model_len);
        if dropped.is_empty() {
            return Ok(correction);
        }
        if c2.is_empty() {
            return Err(SecAggError::NoSurvivors);
        }

        let order = self.params.group_order();
        let mut unrecoverable = Vec::new();
        for &j in dropped {
            let shares = self.sk_shares.get(&j);
            let holders: Vec<usize> = self
                .participants
                .iter()
                .copied()
                .filter(|&h| h != j)
                .collect();
            let collected: Option<Vec<&BigUint>> = holders
                .iter()
                .map(|h| shares.and_then(|s| s.get(h)))
                .collect();
            let Some(collected) = collected.filter(|c| !c.is_empty()) else {
                unrecoverable.push(j);
                continue;
            };
            let sk = self
                .params
                .canonical_exponent(&reconstruct_additive(collected, order));
            let mask_public = &self
                .keys
                .get(&j)
                .ok_or(SecAggError::MissingPeerKey(j))?
                .mask_public;
            if &self.params.g().modpow(&sk, self.params.p()) != mask_public {
                unrecoverable.push(j);
                continue;
            }
            for &k in c2 {
                let peer = self.keys.get(&k).ok_or(SecAggError::MissingPeerKey(k))?;
                let secret = derive_shared_secret(&self.params, &sk, &peer.mask_public)?;
                let m = pairwise_mask(&secret, (j, k), self.model_len, self.modulus);
                if j > k {
                    correction.add_assign(&m)?;
                } else {
                    correction.sub_assign(&m)?;
                }
            }
        }
        if !unrecoverable.is_empty() {
            return Err(SecAggError::UnrecoverableDropout(unrecoverable));
        }
        Ok(correction)
    }
}
