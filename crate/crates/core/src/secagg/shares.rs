//! Additive splitting of b_i and SK_i^1 and the encrypted share envelopes.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::SecAggError;
use crate::crypto::{
    context_with, derive_shared_secret, fixed_width_be, random_below, secret_to_seed,
    stream_decrypt, stream_encrypt, DhParams, PrgSeed,
};

/// Splits `value` into `count` additive shares mod `modulus`.
///
/// The first `count - 1` shares are uniform; the last is
/// `value - sum(others) mod modulus`.
pub fn split_additive<R: RngCore + ?Sized>(
    value: &BigUint,
    modulus: &BigUint,
    count: usize,
    rng: &mut R,
) -> Result<Vec<BigUint>, SecAggError> {
    if count == 0 {
        return Err(SecAggError::ZeroShareCount);
    }
    let mut shares = Vec::with_capacity(count);
    let mut acc = BigUint::zero();
    for _ in 1..count {
        let s = random_below(modulus, rng);
        acc += &s;
        shares.push(s);
    }
    let value = value % modulus;
    let acc = acc % modulus;
    shares.push((value + modulus - acc) % modulus);
    Ok(shares)
}

/// Sums shares mod `modulus`.
pub fn reconstruct_additive<'a, I>(shares: I, modulus: &BigUint) -> BigUint
where
    I: IntoIterator<Item = &'a BigUint>,
{
    shares
        .into_iter()
        .fold(BigUint::zero(), |acc, s| (acc + s) % modulus)
}

/// The pair of shares client `origin` assigns to client `recipient`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareBundle {
    pub origin: usize,
    pub recipient: usize,
    /// b_{i,j}, mod R.
    pub b_share: u64,
    /// SK^1_{i,j}, mod p - 1.
    pub sk_share: BigUint,
}

impl ShareBundle {
    /// Plaintext layout: `origin:u32 ‖ recipient:u32 ‖ b:u64 ‖ sk:[u8; w]`,
    /// big-endian, where w is the byte width of p.
    pub fn encode(&self, params: &DhParams) -> Vec<u8> {
        let width = params.element_width();
        let mut out = Vec::with_capacity(16 + width);
        out.extend_from_slice(&(self.origin as u32).to_be_bytes());
        out.extend_from_slice(&(self.recipient as u32).to_be_bytes());
        out.extend_from_slice(&self.b_share.to_be_bytes());
        out.extend_from_slice(&fixed_width_be(&self.sk_share, width));
        out
    }

    pub fn decode(bytes: &[u8], params: &DhParams) -> Option<Self> {
        let width = params.element_width();
        if bytes.len() != 16 + width {
            return None;
        }
        let origin = u32::from_be_bytes(bytes[0..4].try_into().ok()?) as usize;
        let recipient = u32::from_be_bytes(bytes[4..8].try_into().ok()?) as usize;
        let b_share = u64::from_be_bytes(bytes[8..16].try_into().ok()?);
        let sk_share = BigUint::from_bytes_be(&bytes[16..]);
        Some(Self {
            origin,
            recipient,
            b_share,
            sk_share,
        })
    }
}

/// Encrypted share bundle e_{i,j}. Routing metadata travels in the clear.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CipherText {
    pub round: u64,
    pub origin: usize,
    pub recipient: usize,
    pub body: Vec<u8>,
}

/// Keystream seed for the envelope from `origin` to `recipient`:
/// the pair's key-pair-2 secret hashed with `"cipher" ‖ round ‖ origin ‖ recipient`.
pub fn envelope_seed(
    params: &DhParams,
    my_private: &BigUint,
    their_public: &BigUint,
    round: u64,
    origin: usize,
    recipient: usize,
) -> Result<PrgSeed, SecAggError> {
    let secret = derive_shared_secret(params, my_private, their_public)?;
    let ctx = context_with("cipher", &[round, origin as u64, recipient as u64]);
    Ok(secret_to_seed(&secret, &ctx))
}

pub fn seal(bundle: &ShareBundle, round: u64, seed: PrgSeed, params: &DhParams) -> CipherText {
    CipherText {
        round,
        origin: bundle.origin,
        recipient: bundle.recipient,
        body: stream_encrypt(seed, &bundle.encode(params)),
    }
}

/// Decrypts and checks that the plaintext header names the expected pair.
pub fn open(
    envelope: &CipherText,
    seed: PrgSeed,
    params: &DhParams,
) -> Result<ShareBundle, SecAggError> {
    let plain = stream_decrypt(seed, &envelope.body);
    match ShareBundle::decode(&plain, params) {
        Some(b) if b.origin == envelope.origin && b.recipient == envelope.recipient => Ok(b),
        _ => Err(SecAggError::HeaderMismatch {
            origin: envelope.origin,
            recipient: envelope.recipient,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn pow2_64() -> BigUint {
        BigUint::from(1u8) << 64u32
    }

    #[test]
    fn split_sums_back() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m = pow2_64();
        let shares = split_additive(&BigUint::from(10u32), &m, 7, &mut rng).unwrap();
        assert_eq!(shares.len(), 7);
        // Independent re-sum with wrapping u64 arithmetic.
        let total = shares
            .iter()
            .map(|s| u64::try_from(s).unwrap())
            .fold(0u64, |a, b| a.wrapping_add(b));
        assert_eq!(total, 10);
    }

    #[test]
    fn zero_value_and_single_share() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let m = BigUint::from(22u32);
        let shares = split_additive(&BigUint::zero(), &m, 5, &mut rng).unwrap();
        assert!(reconstruct_additive(&shares, &m).is_zero());
        let one = split_additive(&BigUint::from(13u32), &m, 1, &mut rng).unwrap();
        assert_eq!(one, vec![BigUint::from(13u32)]);
    }

    #[test]
    fn zero_count_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        assert_eq!(
            split_additive(&BigUint::zero(), &pow2_64(), 0, &mut rng),
            Err(SecAggError::ZeroShareCount)
        );
    }

    #[test]
    fn bundle_layout() {
        let params = DhParams::toy();
        let b = ShareBundle {
            origin: 1,
            recipient: 258,
            b_share: 0x0102_0304_0506_0708,
            sk_share: BigUint::from(21u32),
        };
        let bytes = b.encode(&params);
        assert_eq!(
            bytes,
            vec![0, 0, 0, 1, 0, 0, 1, 2, 1, 2, 3, 4, 5, 6, 7, 8, 21]
        );
        assert_eq!(ShareBundle::decode(&bytes, &params), Some(b));
        assert_eq!(ShareBundle::decode(&bytes[1..], &params), None);
    }

    #[test]
    fn wrong_seed_fails_header_check() {
        let params = DhParams::toy();
        let bundle = ShareBundle {
            origin: 0,
            recipient: 1,
            b_share: 99,
            sk_share: BigUint::from(3u32),
        };
        let ct = seal(&bundle, 1, PrgSeed(10), &params);
        assert_eq!(open(&ct, PrgSeed(10), &params).unwrap(), bundle);
        assert_eq!(
            open(&ct, PrgSeed(11), &params),
            Err(SecAggError::HeaderMismatch {
                origin: 0,
                recipient: 1
            })
        );
    }
}
