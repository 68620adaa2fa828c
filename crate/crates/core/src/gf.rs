//! Arithmetic in GF(2^8) and GF(2^16).
//!
//! Elements are carried as `u16` regardless of width. Addition is XOR.
//! Multiplication goes through log/antilog tables that are generated once
//! per width from the carry-less reference multiply in [`clmul_reduce`].

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A field element. Only the low `w` bits are ever set.
pub type Symbol = u16;

/// Reduction polynomial for GF(2^8): x^8 + x^4 + x^3 + x^2 + 1.
pub const POLY_GF256: u32 = 0x11D;
/// Reduction polynomial for GF(2^16): x^16 + x^12 + x^3 + x + 1.
pub const POLY_GF65536: u32 = 0x1100B;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum FieldWidth {
    #[serde(rename = "8")]
    W8,
    #[default]
    #[serde(rename = "16")]
    W16,
}

impl FieldWidth {
    pub fn bits(self) -> u32 {
        match self {
            FieldWidth::W8 => 8,
            FieldWidth::W16 => 16,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(FieldWidth::W8),
            16 => Ok(FieldWidth::W16),
            other => Err(Error::InvalidParams(format!(
                "field width must be 8 or 16, got {other}"
            ))),
        }
    }

    pub fn poly(self) -> u32 {
        match self {
            FieldWidth::W8 => POLY_GF256,
            FieldWidth::W16 => POLY_GF65536,
        }
    }

    /// Bytes used per symbol when serialized.
    pub fn symbol_bytes(self) -> usize {
        (self.bits() / 8) as usize
    }

    pub fn field(self) -> &'static Field {
        Field::get(self)
    }
}

impl fmt::Display for FieldWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})", self.bits())
    }
}

/// Carry-less multiply followed by reduction modulo the width's polynomial.
///
/// This is the slow bit-serial definition of the product; the table-driven
/// [`Field::mul`] is checked against it.
pub fn clmul_reduce(width: FieldWidth, a: Symbol, b: Symbol) -> Symbol {
    let bits = width.bits();
    let poly = width.poly();
    let mut acc: u32 = 0;
    let a = a as u32;
    let b = b as u32;
    for i in 0..bits {
        if (b >> i) & 1 == 1 {
            acc ^= a << i;
        }
    }
    for i in (bits..2 * bits).rev() {
        if (acc >> i) & 1 == 1 {
            acc ^= poly << (i - bits);
        }
    }
    acc as Symbol
}

/// Log/antilog tables for one field width.
pub struct Field {
    width: FieldWidth,
    /// Multiplicative group order, 2^w - 1.
    group: usize,
    /// exp[i] = g^i for i in [0, 2*group), so sums of two logs index directly.
    exp: Vec<Symbol>,
    /// log[0] is unused.
    log: Vec<u32>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("width", &self.width).finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
    }
}

impl Eq for Field {}

static GF256: OnceLock<Field> = OnceLock::new();
static GF65536: OnceLock<Field> = OnceLock::new();

impl Field {
    pub fn get(width: FieldWidth) -> &'static Field {
        match width {
            FieldWidth::W8 => GF256.get_or_init(|| Field::build(width)),
            FieldWidth::W16 => GF65536.get_or_init(|| Field::build(width)),
        }
    }

    fn build(width: FieldWidth) -> Field {
        let size = 1usize << width.bits();
        let group = size - 1;
        let mut exp = vec![0 as Symbol; 2 * group];
        let mut log = vec![0u32; size];
        // x (= 2) generates the multiplicative group for both polynomials.
        let mut x: Symbol = 1;
        for (i, slot) in exp.iter_mut().take(group).enumerate() {
            *slot = x;
            log[x as usize] = i as u32;
            x = clmul_reduce(width, x, 2);
        }
        assert_eq!(x, 1, "reduction polynomial for {width} is not primitive");
        for i in group..2 * group {
            exp[i] = exp[i - group];
        }
        Field {
            width,
            group,
            exp,
            log,
        }
    }

    pub fn width(&self) -> FieldWidth {
        self.width
    }

    /// Number of elements, 2^w.
    pub fn size(&self) -> usize {
        self.group + 1
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let l = self.log[a as usize] as usize;
        Ok(self.exp[(self.group - l) % self.group])
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Symbol, e: u64) -> Symbol {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let l = self.log[a as usize] as u64;
        self.exp[((l * e) % self.group as u64) as usize]
    }

    /// `dst[i] += c * src[i]` over the whole slice.
    #[inline]
    pub fn axpy(&self, dst: &mut [Symbol], c: Symbol, src: &[Symbol]) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        if c == 1 {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= *s;
            }
            return;
        }
        let lc = self.log[c as usize];
        for (d, &s) in dst.iter_mut().zip(src) {
            if s != 0 {
                *d ^= self.exp[(lc + self.log[s as usize]) as usize];
            }
        }
    }

    /// `v[i] *= c` over the whole slice.
    pub fn scale(&self, v: &mut [Symbol], c: Symbol) {
        for x in v.iter_mut() {
            *x = self.mul(*x, c);
        }
    }

    pub fn dot(&self, a: &[Symbol], b: &[Symbol]) -> Symbol {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| acc ^ self.mul(x, y))
    }

    /// Uniformly random element.
    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Symbol {
        (rng.gen::<u32>() as usize % self.size()) as Symbol
    }

    /// Masks an arbitrary integer into the field.
    pub fn element(&self, v: u64) -> Symbol {
        (v % self.size() as u64) as Symbol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_identities() {
        for w in [FieldWidth::W8, FieldWidth::W16] {
            let f = w.field();
            for a in [0u16, 1, 2, 77, 200] {
                assert_eq!(f.mul(a, 0), 0);
                assert_eq!(f.mul(a, 1), a);
            }
        }
        assert_eq!(FieldWidth::W8.field().mul(2, 2), 4);
    }

    #[test]
    fn inverse_of_two_in_gf256() {
        let f = FieldWidth::W8.field();
        let v = f.inv(2).unwrap();
        // x * x^7... the inverse of x mod 0x11D is (0x11D ^ 1) >> 1.
        assert_eq!(v, ((POLY_GF256 ^ 1) >> 1) as u16);
        assert_eq!(clmul_reduce(FieldWidth::W8, 2, v), 1);
        assert_eq!(f.inv(1).unwrap(), 1);
        assert!(matches!(f.inv(0), Err(Error::ZeroInverse)));
    }

    #[test]
    fn tables_match_reference_gf256_exhaustive() {
        let f = FieldWidth::W8.field();
        for a in 0..256u16 {
            for b in 0..256u16 {
                assert_eq!(f.mul(a, b), clmul_reduce(FieldWidth::W8, a, b));
            }
        }
    }

    #[test]
    fn tables_match_reference_gf65536_sampled() {
        let f = FieldWidth::W16.field();
        let mut x: u32 = 0x1234_5678;
        for _ in 0..200_000 {
            x ^= x << 13;
            x ^= x >> 17;
            x ^= x << 5;
            let a = (x & 0xffff) as u16;
            let b = (x >> 16) as u16;
            assert_eq!(f.mul(a, b), clmul_reduce(FieldWidth::W16, a, b));
        }
    }

    #[test]
    fn every_nonzero_element_has_inverse_gf65536() {
        let f = FieldWidth::W16.field();
        for a in 1..=u16::MAX {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
    }

    #[test]
    fn distributive_gf256_exhaustive() {
        let f = FieldWidth::W8.field();
        for a in 0..256u16 {
            for b in 0..256u16 {
                // c sampled on a stride to keep this under a second.
                for c in (0..256u16).step_by(17) {
                    assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                }
            }
        }
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let f = FieldWidth::W16.field();
        let mut acc = 1;
        for e in 0..40 {
            assert_eq!(f.pow(3, e), acc);
            acc = f.mul(acc, 3);
        }
    }
}
