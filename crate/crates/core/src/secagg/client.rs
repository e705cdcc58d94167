use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigUint;
use rand::RngCore;

use super::shares::{envelope_seed, open, seal, split_additive, CipherText, ShareBundle};
use super::{pairwise_mask, PeerKeys, SecAggError};
use crate::crypto::{
    derive_shared_secret, gen_keypair, integer_to_seed, prg_expand, DhParams, KeyPair, MaskVector,
    ModelVector, RingModulus, SharedSecret,
};

/// Generates the two key pairs a SecAgg client uses each round:
/// the first for pairwise masks, the second for share envelopes.
pub fn client_keygen<R: RngCore + ?Sized>(params: &DhParams, rng: &mut R) -> (KeyPair, KeyPair) {
    let mask = gen_keypair(params, rng);
    let cipher = gen_keypair(params, rng);
    (mask, cipher)
}

/// Individual mask M_i expanded from the random element b_i.
pub fn individual_mask(b: u64, len: usize, modulus: RingModulus) -> MaskVector {
    prg_expand(integer_to_seed(&BigUint::from(b), b"indiv"), len, modulus)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    KeysAdvertised,
    KeysReceived,
    SharesSent,
    EnvelopesReceived,
    MaskedSent,
    Revealed,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::KeysAdvertised => "keys advertised (step 1)",
            Phase::KeysReceived => "keys received (step 3)",
            Phase::SharesSent => "shares sent (step 4)",
            Phase::EnvelopesReceived => "envelopes received (step 5)",
            Phase::MaskedSent => "masked model sent (step 6)",
            Phase::Revealed => "shares revealed (step 7)",
        }
    }
}

/// A b-share handed to the server in step 7.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevealedBShare {
    /// Client whose random element b this is a share of.
    pub origin: usize,
    /// Client the share was assigned to.
    pub holder: usize,
    pub value: u64,
}

/// A share of a dropped client's SK^1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevealedSkShare {
    pub origin: usize,
    pub holder: usize,
    pub value: BigUint,
}

/// Everything one client sends the server in step 7.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Reveal {
    pub b_shares: Vec<RevealedBShare>,
    pub sk_shares: Vec<RevealedSkShare>,
}

impl Reveal {
    pub fn value_count(&self) -> usize {
        self.b_shares.len() + self.sk_shares.len()
    }
}

/// One SecAgg client. Drive it through the steps in order each round:
/// [`begin_round`](Self::begin_round), [`receive_public_keys`](Self::receive_public_keys),
/// [`build_share_envelopes`](Self::build_share_envelopes),
/// [`receive_envelopes`](Self::receive_envelopes),
/// [`compute_masked_model`](Self::compute_masked_model),
/// [`reveal_shares`](Self::reveal_shares).
pub struct SecAggClient {
    index: usize,
    params: Arc<DhParams>,
    modulus: RingModulus,
    phase: Phase,
    round: u64,
    mask_keys: Option<KeyPair>,
    cipher_keys: Option<KeyPair>,
    b: u64,
    model: Option<ModelVector>,
    peers: BTreeMap<usize, PeerKeys>,
    /// Bundles this client generated, keyed by recipient.
    own_bundles: BTreeMap<usize, ShareBundle>,
    /// e_{j,i}, keyed by origin j.
    inbox: BTreeMap<usize, CipherText>,
    secrets: BTreeMap<usize, SharedSecret>,
    c1: BTreeSet<usize>,
}

impl SecAggClient {
    pub fn new(index: usize, params: Arc<DhParams>, modulus: RingModulus) -> Self {
        Self {
            index,
            params,
            modulus,
            phase: Phase::Idle,
            round: 0,
            mask_keys: None,
            cipher_keys: None,
            b: 0,
            model: None,
            peers: BTreeMap::new(),
            own_bundles: BTreeMap::new(),
            inbox: BTreeMap::new(),
            secrets: BTreeMap::new(),
            c1: BTreeSet::new(),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// The random element b_i of the current round.
    pub fn random_element(&self) -> u64 {
        self.b
    }

    pub fn mask_keys(&self) -> Option<&KeyPair> {
        self.mask_keys.as_ref()
    }

    pub fn own_bundles(&self) -> &BTreeMap<usize, ShareBundle> {
        &self.own_bundles
    }

    fn expect(&self, phase: Phase) -> Result<(), SecAggError> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(SecAggError::OutOfOrder {
                expected: phase.name(),
                found: self.phase.name(),
            })
        }
    }

    /// Step (1): takes the trained model for this round, generates both key
    /// pairs and a fresh b_i, and returns the public keys to upload.
    /// Always allowed; it discards any state left from a previous round.
    pub fn begin_round<R: RngCore + ?Sized>(
        &mut self,
        round: u64,
        model: ModelVector,
        rng: &mut R,
    ) -> PeerKeys {
        let (mask, cipher) = client_keygen(&self.params, rng);
        let keys = PeerKeys {
            mask_public: mask.public().clone(),
            cipher_public: cipher.public().clone(),
        };
        self.round = round;
        self.b = self.modulus.reduce(rng.next_u64());
        self.mask_keys = Some(mask);
        self.cipher_keys = Some(cipher);
        self.model = Some(model);
        self.peers.clear();
        self.own_bundles.clear();
        self.inbox.clear();
        self.secrets.clear();
        self.c1.clear();
        self.phase = Phase::KeysAdvertised;
        keys
    }

    /// Step (3): the server's broadcast of every participant's public keys.
    pub fn receive_public_keys(
        &mut self,
        directory: &BTreeMap<usize, PeerKeys>,
    ) -> Result<(), SecAggError> {
        self.expect(Phase::KeysAdvertised)?;
        if !directory.contains_key(&self.index) {
            return Err(SecAggError::NotParticipant(self.index));
        }
        self.peers = directory.clone();
        self.phase = Phase::KeysReceived;
        Ok(())
    }

    /// Step (4): splits b_i into |C| shares mod R and SK_i^1 into shares
    /// mod p - 1, and encrypts one bundle for every peer in `participants`.
    ///
    /// The SK^1 share a client keeps for itself is zero, so a dropped
    /// client's key is recoverable from its peers alone.
    pub fn build_share_envelopes<R: RngCore + ?Sized>(
        &mut self,
        participants: &BTreeSet<usize>,
        rng: &mut R,
    ) -> Result<Vec<CipherText>, SecAggError> {
        self.expect(Phase::KeysReceived)?;
        if !participants.contains(&self.index) {
            return Err(SecAggError::NotParticipant(self.index));
        }
        for j in participants {
            if !self.peers.contains_key(j) {
                return Err(SecAggError::MissingPeerKey(*j));
            }
        }
        let mask_keys = self.mask_keys.as_ref().expect("keys set in step 1");
        let cipher_keys = self.cipher_keys.as_ref().expect("keys set in step 1");

        let ring = BigUint::from(self.modulus.max_element()) + 1u32;
        let b_parts = split_additive(&BigUint::from(self.b), &ring, participants.len(), rng)?;
        let peer_count = participants.len() - 1;
        let sk_parts = if peer_count == 0 {
            Vec::new()
        } else {
            split_additive(
                mask_keys.private(),
                self.params.group_order(),
                peer_count,
                rng,
            )?
        };

        let mut sk_iter = sk_parts.into_iter();
        let mut envelopes = Vec::with_capacity(peer_count);
        for (&j, b_part) in participants.iter().zip(b_parts) {
            let b_share = u64::try_from(&b_part).expect("share below R fits in u64");
            let sk_share = if j == self.index {
                if peer_count == 0 {
                    mask_keys.private().clone()
                } else {
                    BigUint::default()
                }
            } else {
                sk_iter.next().expect("one SK share per peer")
            };
            let bundle = ShareBundle {
                origin: self.index,
                recipient: j,
                b_share,
                sk_share,
            };
            if j != self.index {
                let seed = envelope_seed(
                    &self.params,
                    cipher_keys.private(),
                    &self.peers[&j].cipher_public,
                    self.round,
                    self.index,
                    j,
                )?;
                envelopes.push(seal(&bundle, self.round, seed, &self.params));
            }
            self.own_bundles.insert(j, bundle);
        }
        self.phase = Phase::SharesSent;
        Ok(envelopes)
    }

    /// Step (5): the envelopes e_{j,i} routed to this client.
    pub fn receive_envelopes(&mut self, envelopes: Vec<CipherText>) -> Result<(), SecAggError> {
        self.expect(Phase::SharesSent)?;
        for e in envelopes {
            if e.recipient != self.index || e.round != self.round {
                return Err(SecAggError::MisaddressedEnvelope {
                    origin: e.origin,
                    recipient: e.recipient,
                });
            }
            let origin = e.origin;
            if self.inbox.insert(origin, e).is_some() {
                return Err(SecAggError::DuplicateEnvelope {
                    origin,
                    recipient: self.index,
                });
            }
        }
        self.phase = Phase::EnvelopesReceived;
        Ok(())
    }

    /// Step (6): W_i + M_i + sum_{j>i} M_{i,j} - sum_{j<i} M_{j,i} over j in C_1.
    pub fn compute_masked_model(
        &mut self,
        c1: &BTreeSet<usize>,
    ) -> Result<ModelVector, SecAggError> {
        self.expect(Phase::EnvelopesReceived)?;
        let model = self.model.as_ref().expect("model set in step 1");
        let len = model.len();
        let mask_private = self
            .mask_keys
            .as_ref()
            .expect("keys set in step 1")
            .private();

        let mut masked = model.clone();
        masked.add_assign(&individual_mask(self.b, len, self.modulus))?;
        for &j in c1.iter().filter(|&&j| j != self.index) {
            let peer = self.peers.get(&j).ok_or(SecAggError::MissingPeerKey(j))?;
            let secret = derive_shared_secret(&self.params, mask_private, &peer.mask_public)?;
            let m = pairwise_mask(&secret, (self.index, j), len, self.modulus);
            if j > self.index {
                masked.add_assign(&m)?;
            } else {
                masked.sub_assign(&m)?;
            }
            self.secrets.insert(j, secret);
        }
        self.c1 = c1.clone();
        self.phase = Phase::MaskedSent;
        Ok(masked)
    }

    /// Step (7): given the survivor set C_2, decrypts e_{j,i} and returns
    /// b_{j,i} for every j in C_2 (own share included). For each client k
    /// that dropped, also returns SK^1_{k,i}, plus this client's own b_{i,k}
    /// since k can no longer report it.
    pub fn reveal_shares(&mut self, c2: &BTreeSet<usize>) -> Result<Reveal, SecAggError> {
        self.expect(Phase::MaskedSent)?;
        let cipher_private = self
            .cipher_keys
            .as_ref()
            .expect("keys set in step 1")
            .private();
        let mut reveal = Reveal::default();

        let mut opened = BTreeMap::new();
        for &j in self.c1.iter().filter(|&&j| j != self.index) {
            let e = self.inbox.get(&j).ok_or(SecAggError::MissingEnvelope {
                origin: j,
                recipient: self.index,
            })?;
            let peer = self.peers.get(&j).ok_or(SecAggError::MissingPeerKey(j))?;
            let seed = envelope_seed(
                &self.params,
                cipher_private,
                &peer.cipher_public,
                self.round,
                j,
                self.index,
            )?;
            opened.insert(j, open(e, seed, &self.params)?);
        }

        for &j in c2 {
            let value = if j == self.index {
                self.own_bundles
                    .get(&self.index)
                    .map(|b| b.b_share)
                    .ok_or(SecAggError::NotParticipant(self.index))?
            } else {
                opened
                    .get(&j)
                    .map(|b| b.b_share)
                    .ok_or(SecAggError::MissingEnvelope {
                        origin: j,
                        recipient: self.index,
                    })?
            };
            reveal.b_shares.push(RevealedBShare {
                origin: j,
                holder: self.index,
                value,
            });
        }

        if c2.contains(&self.index) {
            for (&k, bundle) in &self.own_bundles {
                if !c2.contains(&k) {
                    reveal.b_shares.push(RevealedBShare {
                        origin: self.index,
                        holder: k,
                        value: bundle.b_share,
                    });
                }
            }
        }

        for (&k, bundle) in &opened {
            if !c2.contains(&k) {
                reveal.sk_shares.push(RevealedSkShare {
                    origin: k,
                    holder: self.index,
                    value: bundle.sk_share.clone(),
                });
            }
        }

        self.phase = Phase::Revealed;
        Ok(reveal)
    }

    /// Pairwise secrets derived in step 6, for tests.
    pub fn shared_secrets(&self) -> &BTreeMap<usize, SharedSecret> {
        &self.secrets
    }
}
