//! Finite-field Diffie-Hellman over Z_p*.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::CryptoError;

/// RFC 3526 group 14 (2048-bit MODP safe prime).
const MODP_2048_P: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

/// Smallest primitive root of the group 14 prime. The RFC's g = 2 only
/// generates the order-q subgroup.
const MODP_2048_G: u32 = 11;

/// Witness bases for Miller-Rabin.
const MR_BASES: [u32; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Largest p for which [`DhParams::generates_group_exhaustive`] will walk
/// the whole cyclic group.
const EXHAUSTIVE_LIMIT: u64 = 1 << 24;

/// Built-in parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamSet {
    /// p = 23, g = 5.
    Toy,
    /// 2048-bit safe prime.
    Modp2048,
}

impl ParamSet {
    pub fn params(self) -> DhParams {
        match self {
            ParamSet::Toy => DhParams::toy(),
            ParamSet::Modp2048 => DhParams::modp2048(),
        }
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamSet::Toy => "toy",
            ParamSet::Modp2048 => "modp2048",
        })
    }
}

impl FromStr for ParamSet {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "toy" => Ok(ParamSet::Toy),
            "modp2048" => Ok(ParamSet::Modp2048),
            other => Err(CryptoError::UnknownParamSet(other.to_string())),
        }
    }
}

/// Public group parameters: a prime p and a generator g of Z_p*.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DhParams {
    p: BigUint,
    g: BigUint,
    order: BigUint,
}

impl DhParams {
    /// Validates `p` with Miller-Rabin and checks 1 < g < p.
    pub fn new(p: BigUint, g: BigUint) -> Result<Self, CryptoError> {
        if !is_probable_prime(&p) {
            return Err(CryptoError::NotPrime);
        }
        if g <= BigUint::one() || g >= p {
            return Err(CryptoError::InvalidGenerator);
        }
        let order = &p - 1u32;
        Ok(Self { p, g, order })
    }

    pub fn toy() -> Self {
        Self::new(BigUint::from(23u32), BigUint::from(5u32)).expect("toy parameters are valid")
    }

    pub fn modp2048() -> Self {
        let p = BigUint::parse_bytes(MODP_2048_P.as_bytes(), 16).expect("valid hex literal");
        Self::new(p, BigUint::from(MODP_2048_G)).expect("group 14 parameters are valid")
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    /// p - 1, the order of Z_p* and the modulus for exponent arithmetic.
    pub fn group_order(&self) -> &BigUint {
        &self.order
    }

    /// Fixed width in bytes of a big-endian group element or exponent.
    pub fn element_width(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }

    /// Walks the powers of g and reports whether it has order p - 1.
    /// Returns `None` when p is too large to enumerate.
    pub fn generates_group_exhaustive(&self) -> Option<bool> {
        let p = u64::try_from(&self.p)
            .ok()
            .filter(|&p| p <= EXHAUSTIVE_LIMIT)?;
        let g = u64::try_from(&self.g).ok()?;
        let mut x = g;
        let mut order = 1u64;
        while x != 1 {
            x = x * g % p;
            order += 1;
        }
        Some(order == p - 1)
    }

    /// For a safe prime p = 2q + 1 (q prime), g generates Z_p* iff
    /// g^2 != 1 and g^q != 1. Returns false if p is not a safe prime.
    pub fn is_safe_prime_generator(&self) -> bool {
        if self.p.bits() < 3 {
            return false;
        }
        let q = &self.order >> 1u32;
        if !is_probable_prime(&q) {
            return false;
        }
        let one = BigUint::one();
        self.g.modpow(&BigUint::from(2u32), &self.p) != one && self.g.modpow(&q, &self.p) != one
    }

    /// Maps an exponent residue mod p - 1 to the canonical private-key range
    /// [1, p - 1] (0 and p - 1 are the same exponent).
    pub fn canonical_exponent(&self, e: &BigUint) -> BigUint {
        let r = e % &self.order;
        if r.is_zero() {
            self.order.clone()
        } else {
            r
        }
    }

    /// Uniform integer in [low, p - 1].
    fn sample_range<R: RngCore + ?Sized>(&self, low: u32, rng: &mut R) -> BigUint {
        let span = &self.p - low;
        random_below(&span, rng) + low
    }
}

/// Big-endian encoding left-padded with zeros to exactly `width` bytes.
///
/// Panics if `x` does not fit.
pub fn fixed_width_be(x: &BigUint, width: usize) -> Vec<u8> {
    let raw = if x.is_zero() {
        Vec::new()
    } else {
        x.to_bytes_be()
    };
    assert!(raw.len() <= width, "integer wider than {width} bytes");
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// Uniform sample in [0, bound) by rejection from the smallest covering
/// power of two. `bound` must be nonzero.
pub(crate) fn random_below<R: RngCore + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    debug_assert!(!bound.is_zero());
    let bits = bound.bits();
    let nbytes = bits.div_ceil(8) as usize;
    let excess = (nbytes as u64 * 8 - bits) as u32;
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill_bytes(&mut buf);
        buf[0] &= 0xffu8 >> excess;
        let x = BigUint::from_bytes_be(&buf);
        if &x < bound {
            return x;
        }
    }
}

fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &b in &MR_BASES {
        let b = BigUint::from(b);
        if n == &b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'witness: for &b in &MR_BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A private exponent and its public key g^private mod p.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    private: BigUint,
    public: BigUint,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn from_private(params: &DhParams, private: BigUint) -> Result<Self, CryptoError> {
        if private.is_zero() || &private > params.group_order() {
            return Err(CryptoError::PrivateKeyOutOfRange);
        }
        let public = params.g.modpow(&private, &params.p);
        Ok(Self { private, public })
    }

    pub fn private(&self) -> &BigUint {
        &self.private
    }

    pub fn public(&self) -> &BigUint {
        &self.public
    }

    /// Recomputes g^private and compares with the stored public key.
    pub fn is_consistent(&self, params: &DhParams) -> bool {
        params.g.modpow(&self.private, &params.p) == self.public
    }
}

/// Draws a private key uniformly from [1, p - 1].
pub fn gen_keypair<R: RngCore + ?Sized>(params: &DhParams, rng: &mut R) -> KeyPair {
    let private = params.sample_range(1, rng);
    KeyPair::from_private(params, private).expect("sampled key is in range")
}

/// g^(a_i a_j) mod p, identical at both ends of a pair.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SharedSecret {
    value: BigUint,
}

impl fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedSecret(..)")
    }
}

impl SharedSecret {
    pub fn value(&self) -> &BigUint {
        &self.value
    }
}

pub fn derive_shared_secret(
    params: &DhParams,
    my_private: &BigUint,
    their_public: &BigUint,
) -> Result<SharedSecret, CryptoError> {
    if their_public.is_zero() || their_public >= params.p() {
        return Err(CryptoError::MalformedPublicKey);
    }
    if my_private.is_zero() || my_private > params.group_order() {
        return Err(CryptoError::PrivateKeyOutOfRange);
    }
    Ok(SharedSecret {
        value: their_public.modpow(my_private, params.p()),
    })
}
