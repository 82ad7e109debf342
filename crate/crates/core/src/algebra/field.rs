use crate::{Error, Result};
use rand::{Rng, RngCore};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Default modulus: the Mersenne prime 2^61 - 1.
pub const DEFAULT_PRIME: u64 = (1u64 << 61) - 1;

/// A prime field F_p, identified by its modulus.
///
/// `Field` is a small copyable handle; elements carry the modulus with them
/// so cross-field arithmetic is caught immediately.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Field {
    p: u64,
}

impl Field {
    /// Creates the field F_p. Fails if `p` is not prime or does not fit the
    /// arithmetic (moduli above 2^62 would overflow the u128 products).
    pub fn new(p: u64) -> Result<Field> {
        if p < 2 || p >= (1 << 62) {
            return Err(Error::Invalid(format!("modulus {p} out of range")));
        }
        if !is_prime_u64(p) {
            return Err(Error::Invalid(format!("modulus {p} is not prime")));
        }
        Ok(Field { p })
    }

    /// The field with the default 2^61 - 1 modulus.
    pub fn default_field() -> Field {
        Field { p: DEFAULT_PRIME }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Embeds an unsigned integer, reducing mod p.
    pub fn el(&self, v: u64) -> FieldElement {
        FieldElement {
            val: v % self.p,
            p: self.p,
        }
    }

    /// Embeds a signed integer, reducing mod p.
    pub fn from_i64(&self, v: i64) -> FieldElement {
        let r = v.rem_euclid(self.p as i64) as u64;
        FieldElement { val: r, p: self.p }
    }

    pub fn zero(&self) -> FieldElement {
        self.el(0)
    }

    pub fn one(&self) -> FieldElement {
        self.el(1)
    }

    /// Uniformly random element.
    pub fn rand(&self, rng: &mut dyn RngCore) -> FieldElement {
        self.el(rng.gen_range(0..self.p))
    }

    /// Uniformly random nonzero element.
    pub fn rand_nonzero(&self, rng: &mut dyn RngCore) -> FieldElement {
        self.el(rng.gen_range(1..self.p))
    }
}

/// An element of a prime field, carrying its modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    val: u64,
    p: u64,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.val
    }

    pub fn field(&self) -> Field {
        Field { p: self.p }
    }

    pub fn is_zero(&self) -> bool {
        self.val == 0
    }

    pub fn is_one(&self) -> bool {
        self.val == 1
    }

    /// Exponentiation by repeated squaring.
    pub fn pow(&self, mut e: u64) -> FieldElement {
        let mut base = *self;
        let mut acc = FieldElement { val: 1 % self.p, p: self.p };
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; fails on zero.
    pub fn inv(&self) -> Result<FieldElement> {
        if self.val == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(self.p - 2))
    }

    /// Exact division; fails when `rhs` is zero.
    pub fn div(&self, rhs: FieldElement) -> Result<FieldElement> {
        Ok(*self * rhs.inv()?)
    }
}

fn same_field(a: &FieldElement, b: &FieldElement) {
    assert_eq!(a.p, b.p, "mixed moduli {} and {}", a.p, b.p);
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        same_field(&self, &rhs);
        let mut v = self.val + rhs.val;
        if v >= self.p {
            v -= self.p;
        }
        FieldElement { val: v, p: self.p }
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        same_field(&self, &rhs);
        let v = if self.val >= rhs.val {
            self.val - rhs.val
        } else {
            self.val + self.p - rhs.val
        };
        FieldElement { val: v, p: self.p }
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        same_field(&self, &rhs);
        let v = (self.val as u128 * rhs.val as u128) % self.p as u128;
        FieldElement { val: v as u64, p: self.p }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let v = if self.val == 0 { 0 } else { self.p - self.val };
        FieldElement { val: v, p: self.p }
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: FieldElement) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: FieldElement) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: FieldElement) {
        *self = *self * rhs;
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.val)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.val)
    }
}

/// Deterministic Miller-Rabin for u64 moduli.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let pow_mod = |b: u64, mut e: u64| -> u64 {
        let mut acc: u128 = 1;
        let mut bb = b as u128 % n as u128;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * bb % n as u128;
            }
            bb = bb * bb % n as u128;
            e >>= 1;
        }
        acc as u64
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn default_prime_is_prime() {
        assert!(is_prime_u64(DEFAULT_PRIME));
        assert!(Field::new(DEFAULT_PRIME).is_ok());
    }

    #[test]
    fn rejects_composites() {
        assert!(Field::new(1).is_err());
        assert!(Field::new(561).is_err());
        assert!(Field::new((1 << 61) - 3).is_err() || is_prime_u64((1 << 61) - 3));
    }

    #[test]
    fn arithmetic_mod_five() {
        let f = Field::new(5).unwrap();
        let a = f.el(3);
        let b = f.el(4);
        assert_eq!((a + b).value(), 2);
        assert_eq!((a - b).value(), 4);
        assert_eq!((a * b).value(), 2);
        assert_eq!((-a).value(), 2);
        assert_eq!(a.pow(3).value(), 2);
        assert_eq!(a.inv().unwrap().value(), 2);
        assert!(f.zero().inv().is_err());
    }

    #[test]
    fn signed_embedding() {
        let f = Field::new(7).unwrap();
        assert_eq!(f.from_i64(-1).value(), 6);
        assert_eq!(f.from_i64(-15).value(), 6);
        assert_eq!(f.from_i64(15).value(), 1);
    }

    #[test]
    fn inverse_roundtrip_large_field() {
        let f = Field::default_field();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = f.rand_nonzero(&mut rng);
            assert!((a * a.inv().unwrap()).is_one());
        }
    }
}
