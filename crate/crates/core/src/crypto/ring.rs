//! Vectors over the ring Z_R with R a power of two.
//!
//! Models, masks and masked models all live here. Every operation is
//! component-wise and wraps modulo R, so pairwise masks cancel exactly.

use serde::{Deserialize, Serialize};

use super::CryptoError;

/// Power-of-two modulus R = 2^bits, 1 <= bits <= 64.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingModulus {
    bits: u32,
}

impl RingModulus {
    /// Z_{2^64}, plain machine-word wraparound.
    pub const WORD: RingModulus = RingModulus { bits: 64 };

    pub fn new(bits: u32) -> Result<Self, CryptoError> {
        if (1..=64).contains(&bits) {
            Ok(Self { bits })
        } else {
            Err(CryptoError::InvalidRingBits(bits))
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Largest representable element, R - 1.
    pub fn max_element(&self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x & self.max_element()
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        self.reduce(a.wrapping_add(b))
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.reduce(a.wrapping_sub(b))
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        self.reduce(a.wrapping_neg())
    }
}

impl Default for RingModulus {
    fn default() -> Self {
        Self::WORD
    }
}

/// A length-L vector of elements in [0, R).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingVector {
    modulus: RingModulus,
    elems: Vec<u64>,
}

/// A client's model (trained, masked, or aggregated).
pub type ModelVector = RingVector;
/// A PRG-expanded mask.
pub type MaskVector = RingVector;

impl RingVector {
    /// Builds a vector, reducing every element into [0, R).
    pub fn new(modulus: RingModulus, elems: Vec<u64>) -> Self {
        let elems = elems.into_iter().map(|x| modulus.reduce(x)).collect();
        Self { modulus, elems }
    }

    pub fn zeros(modulus: RingModulus, len: usize) -> Self {
        Self {
            modulus,
            elems: vec![0; len],
        }
    }

    pub fn modulus(&self) -> RingModulus {
        self.modulus
    }

    pub fn elems(&self) -> &[u64] {
        &self.elems
    }

    pub fn into_elems(self) -> Vec<u64> {
        self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.elems.iter().all(|&x| x == 0)
    }

    /// Flips the lowest bit of one element. Fault injection for tests and
    /// the tamper scenario in the verifier.
    pub fn flip_low_bit(&mut self, index: usize) {
        if let Some(x) = self.elems.get_mut(index) {
            *x = self.modulus.reduce(*x ^ 1);
        }
    }

    fn check_compatible(&self, other: &RingVector) -> Result<(), CryptoError> {
        if self.modulus != other.modulus {
            return Err(CryptoError::ModulusMismatch {
                left: self.modulus.bits,
                right: other.modulus.bits,
            });
        }
        if self.len() != other.len() {
            return Err(CryptoError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &RingVector) -> Result<(), CryptoError> {
        self.check_compatible(other)?;
        let m = self.modulus;
        for (a, &b) in self.elems.iter_mut().zip(&other.elems) {
            *a = m.add(*a, b);
        }
        Ok(())
    }

    /// In-place `self -= other`.
    pub fn sub_assign(&mut self, other: &RingVector) -> Result<(), CryptoError> {
        self.check_compatible(other)?;
        let m = self.modulus;
        for (a, &b) in self.elems.iter_mut().zip(&other.elems) {
            *a = m.sub(*a, b);
        }
        Ok(())
    }
}

pub fn vec_add(a: &RingVector, b: &RingVector) -> Result<RingVector, CryptoError> {
    let mut out = a.clone();
    out.add_assign(b)?;
    Ok(out)
}

pub fn vec_sub(a: &RingVector, b: &RingVector) -> Result<RingVector, CryptoError> {
    let mut out = a.clone();
    out.sub_assign(b)?;
    Ok(out)
}

pub fn vec_neg(a: &RingVector) -> RingVector {
    let m = a.modulus;
    RingVector {
        modulus: m,
        elems: a.elems.iter().map(|&x| m.neg(x)).collect(),
    }
}

/// Sums a collection of vectors. An empty collection sums to the zero vector
/// of the given shape.
pub fn vec_sum<'a, I>(
    modulus: RingModulus,
    len: usize,
    vectors: I,
) -> Result<RingVector, CryptoError>
where
    I: IntoIterator<Item = &'a RingVector>,
{
    let mut acc = RingVector::zeros(modulus, len);
    for v in vectors {
        acc.add_assign(v)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_addition() {
        let m = RingModulus::WORD;
        let a = RingVector::new(m, vec![1, 2]);
        let b = RingVector::new(m, vec![3, 4]);
        assert_eq!(vec_add(&a, &b).unwrap().elems(), &[4, 6]);
    }

    #[test]
    fn wraparound() {
        let m = RingModulus::WORD;
        let a = RingVector::new(m, vec![u64::MAX, 0]);
        let b = RingVector::new(m, vec![1, 0]);
        assert!(vec_add(&a, &b).unwrap().is_zero());

        let m8 = RingModulus::new(8).unwrap();
        let a = RingVector::new(m8, vec![255, 3]);
        let b = RingVector::new(m8, vec![1, 5]);
        assert_eq!(vec_add(&a, &b).unwrap().elems(), &[0, 8]);
        assert_eq!(vec_sub(&b, &a).unwrap().elems(), &[2, 2]);
    }

    #[test]
    fn negation_is_inverse() {
        let m = RingModulus::new(16).unwrap();
        let v = RingVector::new(m, vec![0, 1, 65535, 1234]);
        assert!(vec_add(&v, &vec_neg(&v)).unwrap().is_zero());
    }

    #[test]
    fn construction_reduces() {
        let m = RingModulus::new(4).unwrap();
        assert_eq!(RingVector::new(m, vec![17, 15]).elems(), &[1, 15]);
    }

    #[test]
    fn mismatches_rejected() {
        let m = RingModulus::WORD;
        let a = RingVector::new(m, vec![1, 2]);
        let b = RingVector::new(m, vec![1]);
        assert_eq!(
            vec_add(&a, &b),
            Err(CryptoError::LengthMismatch { left: 2, right: 1 })
        );
        let c = RingVector::new(RingModulus::new(8).unwrap(), vec![1, 2]);
        assert!(matches!(
            vec_sub(&a, &c),
            Err(CryptoError::ModulusMismatch { .. })
        ));
    }

    #[test]
    fn modulus_bounds() {
        assert!(RingModulus::new(0).is_err());
        assert!(RingModulus::new(65).is_err());
        assert_eq!(RingModulus::new(1).unwrap().max_element(), 1);
        assert_eq!(RingModulus::new(64).unwrap().max_element(), u64::MAX);
    }

    #[test]
    fn empty_sum_is_zero() {
        let m = RingModulus::WORD;
        let s = vec_sum(m, 3, std::iter::empty()).unwrap();
        assert_eq!(s.elems(), &[0, 0, 0]);
    }
}
