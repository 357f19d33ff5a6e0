//! Arithmetic in a prime field GF(P) with `P < 2^31`.

use std::sync::Arc;

use crate::error::ChannelError;

/// Default payload field order, the Fermat prime 2^16 + 1.
pub const DEFAULT_MODULUS: u32 = 65_537;

const INVERSE_TABLE_LIMIT: u32 = 1 << 20;

#[derive(Clone, Debug)]
pub struct PrimeField {
    modulus: u32,
    // inverses of every element, present for small fields
    inverses: Option<Arc<[u32]>>,
}

impl PartialEq for PrimeField {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus
    }
}

impl Eq for PrimeField {}

impl Default for PrimeField {
    fn default() -> Self {
        Self::new(DEFAULT_MODULUS).expect("default modulus is prime")
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n as u64 {
        if (n as u64).is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeField {
    pub fn new(modulus: u32) -> Result<Self, ChannelError> {
        if modulus >= 1 << 31 || !is_prime(modulus) {
            return Err(ChannelError::NotPrime(modulus));
        }
        let inverses = (modulus <= INVERSE_TABLE_LIMIT).then(|| {
            let p = modulus as u64;
            let mut inv = vec![0u32; modulus as usize];
            if modulus > 1 {
                inv[1] = 1;
            }
            for i in 2..p {
                // inv(i) = -(p / i) * inv(p mod i)
                let r = inv[(p % i) as usize] as u64;
                inv[i as usize] = ((p - p / i) * r % p) as u32;
            }
            Arc::from(inv)
        });
        Ok(PrimeField { modulus, inverses })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u32 {
        (v % self.modulus as u64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        let p = self.modulus as u64;
        (if s >= p { s - p } else { s }) as u32
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.modulus - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        (a as u64 * b as u64 % self.modulus as u64) as u32
    }

    pub fn pow(&self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1u32 % self.modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: u32) -> Option<u32> {
        let a = a % self.modulus;
        if a == 0 {
            return None;
        }
        Some(match &self.inverses {
            Some(t) => t[a as usize],
            None => self.pow(a, self.modulus as u64 - 2),
        })
    }

    pub fn div(&self, a: u32, b: u32) -> Option<u32> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    pub fn contains(&self, a: u32) -> bool {
        a < self.modulus
    }
}
