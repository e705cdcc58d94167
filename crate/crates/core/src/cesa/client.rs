use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::RngCore;

use super::pairs::{fp_index, sp_index};
use super::{CesaError, CesaSessionParams};
use crate::crypto::{
    context_with, derive_shared_secret, gen_keypair, prg_expand, secret_to_seed, vec_neg, KeyPair,
    MaskVector, ModelVector, RingModulus, SharedSecret,
};

/// Base mask for the pair {i, j} sharing `secret`; the FP-role end adds it
/// and the SP-role end adds its negation.
pub fn pair_base_mask(
    secret: &SharedSecret,
    pair: (usize, usize),
    len: usize,
    modulus: RingModulus,
) -> MaskVector {
    let (lo, hi) = (pair.0.min(pair.1), pair.0.max(pair.1));
    let ctx = context_with("cesa-pair", &[lo as u64, hi as u64]);
    prg_expand(secret_to_seed(secret, &ctx), len, modulus)
}

/// Client state across Phases I-III. The key pair is generated once and
/// the two pair masks are derived once, then reused every round.
pub struct CesaClient {
    index: usize,
    session: CesaSessionParams,
    keys: KeyPair,
    fp: usize,
    sp: usize,
    peer_keys: BTreeMap<usize, BigUint>,
    masks: Option<(MaskVector, MaskVector)>,
}

impl CesaClient {
    /// Phase I: generates this client's key pair.
    pub fn new<R: RngCore + ?Sized>(
        index: usize,
        session: CesaSessionParams,
        rng: &mut R,
    ) -> Result<Self, CesaError> {
        let clients = session.clients();
        if index >= clients {
            return Err(CesaError::UnknownClient(index));
        }
        let offset = session.offset();
        let fp = fp_index(index, offset, clients);
        let sp = sp_index(index, offset, clients);
        assert!(
            fp != index && sp != index && fp != sp,
            "offset bound guarantees distinct pairs"
        );
        let keys = gen_keypair(session.dh(), rng);
        Ok(Self {
            index,
            session,
            keys,
            fp,
            sp,
            peer_keys: BTreeMap::new(),
            masks: None,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn public_key(&self) -> &BigUint {
        self.keys.public()
    }

    /// (FP_i, SP_i).
    pub fn pair_indices(&self) -> (usize, usize) {
        (self.fp, self.sp)
    }

    /// Phase I broadcast: the public keys of all clients.
    pub fn receive_directory(&mut self, directory: &BTreeMap<usize, BigUint>) {
        self.peer_keys = directory.clone();
    }

    /// Phase II: derives s_{i,FP_i} and s_{i,SP_i} and expands them into
    /// M_{i,FP_i} = +m_fp and M_{i,SP_i} = -m_sp.
    pub fn derive_pair_masks(&mut self) -> Result<(&MaskVector, &MaskVector), CesaError> {
        let dh = self.session.dh();
        let len = self.session.model_len();
        let modulus = self.session.modulus();
        let fp_key = self
            .peer_keys
            .get(&self.fp)
            .ok_or(CesaError::MissingPeerKey(self.fp))?;
        let sp_key = self
            .peer_keys
            .get(&self.sp)
            .ok_or(CesaError::MissingPeerKey(self.sp))?;
        let s_fp = derive_shared_secret(dh, self.keys.private(), fp_key)?;
        let s_sp = derive_shared_secret(dh, self.keys.private(), sp_key)?;
        let m_fp = pair_base_mask(&s_fp, (self.index, self.fp), len, modulus);
        let m_sp = vec_neg(&pair_base_mask(&s_sp, (self.index, self.sp), len, modulus));
        let (fp, sp) = self.masks.insert((m_fp, m_sp));
        Ok((fp, sp))
    }

    /// Stored (M_{i,FP_i}, M_{i,SP_i}), once Phase II has run.
    pub fn pair_masks(&self) -> Option<(&MaskVector, &MaskVector)> {
        self.masks.as_ref().map(|(a, b)| (a, b))
    }

    /// Phase III: W_i + M_{i,FP_i} + M_{i,SP_i}.
    pub fn mask_model(&self, model: &ModelVector) -> Result<ModelVector, CesaError> {
        let (m_fp, m_sp) = self
            .masks
            .as_ref()
            .ok_or(CesaError::MasksNotDerived(self.index))?;
        let mut out = model.clone();
        out.add_assign(m_fp)?;
        out.add_assign(m_sp)?;
        Ok(out)
    }
}
