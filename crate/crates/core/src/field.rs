//! Arithmetic in GF(2^n) for 1 <= n <= 24.
//!
//! Elements are stored as the low `n` bits of a `u32`, read as a polynomial
//! over GF(2) with bit `i` holding the coefficient of `x^i`. Addition is XOR;
//! multiplication is a carry-less product reduced modulo the field's
//! reduction polynomial.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest supported bit-width. Irreducibility is checked by exhaustive
/// trial division, which stays cheap up to here.
pub const MAX_BITS: u32 = 24;

/// Lexicographically smallest irreducible polynomial of each degree 1..=24.
const DEFAULT_POLYS: [u32; MAX_BITS as usize] = [
    0x2, 0x7, 0xb, 0x13, 0x25, 0x43, 0x83, 0x11b, 0x203, 0x409, 0x805, 0x1009, 0x201b, 0x4021,
    0x8003, 0x1002b, 0x20009, 0x40009, 0x80027, 0x100009, 0x200005, 0x400003, 0x800021,
    0x100001b,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field width n={0} out of range 1..={MAX_BITS}")]
    WidthOutOfRange(u32),
    #[error("polynomial {poly:#x} does not have degree {n}")]
    DegreeMismatch { n: u32, poly: u32 },
    #[error("polynomial {0:#x} is reducible over GF(2)")]
    Reducible(u32),
    #[error("operands belong to different fields ({0} vs {1})")]
    Mismatch(FieldSpec, FieldSpec),
    #[error("value {value:#x} does not fit in {n} bits")]
    OutOfRange { n: u32, value: u64 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("malformed field config: {0}")]
    Config(String),
    #[error("malformed element encoding {0:?}")]
    Encoding(String),
}

/// Degree of a nonzero polynomial over GF(2).
fn degree(p: u64) -> u32 {
    63 - p.leading_zeros()
}

fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

/// True iff `poly` has degree >= 1 and no factor of degree 1..=deg/2.
pub fn is_irreducible(poly: u64) -> bool {
    if poly < 2 {
        return false;
    }
    let d = degree(poly);
    let limit = 1u64 << (d / 2 + 1);
    (2..limit).all(|q| poly_rem(poly, q) != 0)
}

/// The field GF(2^n) with an explicit reduction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldSpec {
    n: u32,
    poly: u32,
}

impl FieldSpec {
    /// Field with the default reduction polynomial for `n`.
    pub fn new(n: u32) -> Result<Self, FieldError> {
        if n == 0 || n > MAX_BITS {
            return Err(FieldError::WidthOutOfRange(n));
        }
        Ok(Self {
            n,
            poly: DEFAULT_POLYS[(n - 1) as usize],
        })
    }

    pub fn with_poly(n: u32, poly: u32) -> Result<Self, FieldError> {
        if n == 0 || n > MAX_BITS {
            return Err(FieldError::WidthOutOfRange(n));
        }
        if poly == 0 || degree(poly as u64) != n {
            return Err(FieldError::DegreeMismatch { n, poly });
        }
        if !is_irreducible(poly as u64) {
            return Err(FieldError::Reducible(poly));
        }
        Ok(Self { n, poly })
    }

    pub fn default_poly(n: u32) -> Option<u32> {
        (1..=MAX_BITS)
            .contains(&n)
            .then(|| DEFAULT_POLYS[(n - 1) as usize])
    }

    pub fn bits(&self) -> u32 {
        self.n
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Number of field elements, 2^n.
    pub fn order(&self) -> u64 {
        1u64 << self.n
    }

    pub fn mask(&self) -> u32 {
        ((1u64 << self.n) - 1) as u32
    }

    /// Hex digits in the canonical element encoding.
    pub fn hex_width(&self) -> usize {
        self.n.div_ceil(4) as usize
    }

    /// Bytes in the big-endian wire encoding.
    pub fn byte_width(&self) -> usize {
        self.n.div_ceil(8) as usize
    }

    pub fn element(&self, value: u64) -> Result<FieldElement, FieldError> {
        if value > self.mask() as u64 {
            return Err(FieldError::OutOfRange {
                n: self.n,
                value,
            });
        }
        Ok(FieldElement {
            bits: value as u32,
            spec: *self,
        })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            bits: 0,
            spec: *self,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            bits: 1,
            spec: *self,
        }
    }

    /// Element from raw bits, truncated to `n` bits.
    pub fn wrap(&self, raw: u32) -> FieldElement {
        FieldElement {
            bits: raw & self.mask(),
            spec: *self,
        }
    }

    /// All elements in ascending numeric order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order()).map(move |v| self.wrap(v as u32))
    }

    /// Carry-less product of two reduced operands, reduced modulo `poly`.
    #[inline]
    pub fn mul_raw(&self, a: u32, b: u32) -> u32 {
        let (mut a, mut b) = (a as u64, b);
        let mut acc = 0u64;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            a <<= 1;
            b >>= 1;
        }
        let poly = self.poly as u64;
        let n = self.n;
        while acc >> n != 0 {
            let top = degree(acc);
            acc ^= poly << (top - n);
        }
        acc as u32
    }

    pub fn pow_raw(&self, base: u32, mut exp: u64) -> u32 {
        let mut result = 1u32;
        let mut b = base;
        while exp != 0 {
            if exp & 1 != 0 {
                result = self.mul_raw(result, b);
            }
            b = self.mul_raw(b, b);
            exp >>= 1;
        }
        result
    }

    /// Multiplicative inverse via a^(2^n - 2); `None` for zero.
    pub fn inv_raw(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        Some(self.pow_raw(a, self.order() - 2))
    }

    pub fn parse_element(&self, hex: &str) -> Result<FieldElement, FieldError> {
        if hex.is_empty() || hex.len() > self.hex_width() + 8 {
            return Err(FieldError::Encoding(hex.to_string()));
        }
        let value =
            u64::from_str_radix(hex, 16).map_err(|_| FieldError::Encoding(hex.to_string()))?;
        self.element(value)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} poly={:#x}", self.n, self.poly)
    }
}

/// Parses `n=<int>` with an optional `poly=0x<hex>`, separated by whitespace
/// or commas.
impl FromStr for FieldSpec {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut n = None;
        let mut poly = None;
        for tok in s.split(|c: char| c.is_whitespace() || c == ',') {
            if tok.is_empty() {
                continue;
            }
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| FieldError::Config(tok.to_string()))?;
            match key {
                "n" => {
                    n = Some(
                        value
                            .parse::<u32>()
                            .map_err(|_| FieldError::Config(tok.to_string()))?,
                    )
                }
                "poly" => poly = Some(parse_hex_u32(value)?),
                _ => return Err(FieldError::Config(tok.to_string())),
            }
        }
        let n = n.ok_or_else(|| FieldError::Config("missing n".into()))?;
        match poly {
            Some(p) => FieldSpec::with_poly(n, p),
            None => FieldSpec::new(n),
        }
    }
}

pub(crate) fn parse_hex_u32(s: &str) -> Result<u32, FieldError> {
    let digits = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .ok_or_else(|| FieldError::Config(format!("expected 0x prefix in {s:?}")))?;
    u32::from_str_radix(digits, 16).map_err(|_| FieldError::Config(s.to_string()))
}

/// An element of a specific GF(2^n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    bits: u32,
    spec: FieldSpec,
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.bits
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    fn check(&self, other: &FieldElement) -> Result<(), FieldError> {
        if self.spec != other.spec {
            return Err(FieldError::Mismatch(self.spec, other.spec));
        }
        Ok(())
    }

    pub fn add(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(&other)?;
        Ok(FieldElement {
            bits: self.bits ^ other.bits,
            spec: self.spec,
        })
    }

    pub fn mul(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(&other)?;
        Ok(FieldElement {
            bits: self.spec.mul_raw(self.bits, other.bits),
            spec: self.spec,
        })
    }

    pub fn inv(self) -> Result<FieldElement, FieldError> {
        let bits = self.spec.inv_raw(self.bits).ok_or(FieldError::ZeroInverse)?;
        Ok(FieldElement {
            bits,
            spec: self.spec,
        })
    }

    pub fn pow(self, exp: u64) -> FieldElement {
        FieldElement {
            bits: self.spec.pow_raw(self.bits, exp),
            spec: self.spec,
        }
    }

    /// Lowercase big-endian hex, exactly ceil(n/4) digits.
    pub fn to_hex(&self) -> String {
        format!("{:0width$x}", self.bits, width = self.spec.hex_width())
    }

    /// Big-endian bytes, exactly ceil(n/8) of them.
    pub fn to_be_bytes(&self) -> Vec<u8> {
        let w = self.spec.byte_width();
        self.bits.to_be_bytes()[4 - w..].to_vec()
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf8() -> FieldSpec {
        FieldSpec::with_poly(3, 0b1011).unwrap()
    }

    /// Schoolbook polynomial product followed by long division; shares no
    /// code with `mul_raw`.
    fn long_mul(a: u32, b: u32, poly: u32) -> u32 {
        let mut prod = 0u64;
        for i in 0..32 {
            for j in 0..32 {
                if (a >> i) & 1 == 1 && (b >> j) & 1 == 1 {
                    prod ^= 1 << (i + j);
                }
            }
        }
        let dp = 31 - poly.leading_zeros();
        for bit in (dp..64).rev() {
            if (prod >> bit) & 1 == 1 {
                prod ^= (poly as u64) << (bit - dp);
            }
        }
        prod as u32
    }

    #[test]
    fn add_examples() {
        let f = gf8();
        let e = |v| f.element(v).unwrap();
        assert_eq!(e(0b101).add(e(0b010)).unwrap(), e(0b111));
        assert_eq!(e(0b111).add(e(0b101)).unwrap(), e(0b010));
        for a in f.elements() {
            assert!(a.add(a).unwrap().is_zero());
        }
    }

    #[test]
    fn mul_examples() {
        let f = gf8();
        let e = |v| f.element(v).unwrap();
        assert_eq!(long_mul(0b110, 0b011, 0b1011), 0b001);
        assert_eq!(long_mul(0b011, 0b101, 0b1011), 0b100);
        assert_eq!(e(0b110).mul(e(0b011)).unwrap(), e(0b001));
        assert_eq!(e(0b011).mul(e(0b101)).unwrap(), e(0b100));
        for a in f.elements() {
            assert_eq!(a.mul(f.one()).unwrap(), a);
        }
    }

    #[test]
    fn mul_matches_long_multiplication() {
        for n in 1..=8 {
            let f = FieldSpec::new(n).unwrap();
            for a in 0..f.order().min(64) as u32 {
                for b in 0..f.order().min(64) as u32 {
                    assert_eq!(f.mul_raw(a, b), long_mul(a, b, f.poly()), "n={n} {a}*{b}");
                }
            }
        }
    }

    #[test]
    fn inv_examples() {
        let f = gf8();
        let e = |v| f.element(v).unwrap();
        let by_search = |a: u32| (1..8).find(|&u| long_mul(a, u, 0b1011) == 1).unwrap();
        assert_eq!(by_search(0b010), 0b101);
        assert_eq!(by_search(0b011), 0b110);
        assert_eq!(f.one().inv().unwrap(), f.one());
        assert_eq!(e(0b010).inv().unwrap(), e(0b101));
        assert_eq!(e(0b011).inv().unwrap(), e(0b110));
        assert_eq!(f.zero().inv(), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(0b1011));
        assert!(!is_irreducible(0b101));
        assert!(is_irreducible(0x11b));
        assert!(!is_irreducible(0));
        assert!(!is_irreducible(1));
    }

    #[test]
    fn default_table_is_smallest_irreducible() {
        // Naive oracle: p irreducible iff no q with 1 <= deg q < deg p divides it.
        let naive = |p: u64| (2..p).filter(|&q| degree(q) < degree(p)).all(|q| poly_rem(p, q) != 0);
        for n in 1..=12u32 {
            let first = ((1u64 << n)..(1u64 << (n + 1))).find(|&p| naive(p)).unwrap();
            assert_eq!(FieldSpec::default_poly(n).unwrap() as u64, first, "n={n}");
        }
        for n in 1..=MAX_BITS {
            let p = FieldSpec::default_poly(n).unwrap();
            assert!(is_irreducible(p as u64));
            assert!(((1u64 << n)..p as u64).all(|q| !is_irreducible(q)), "n={n}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(FieldSpec::new(0), Err(FieldError::WidthOutOfRange(0)));
        assert_eq!(FieldSpec::new(25), Err(FieldError::WidthOutOfRange(25)));
        assert_eq!(FieldSpec::with_poly(2, 0b101), Err(FieldError::Reducible(0b101)));
        assert!(matches!(
            FieldSpec::with_poly(3, 0b111),
            Err(FieldError::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let a = FieldSpec::new(3).unwrap().one();
        let b = FieldSpec::new(4).unwrap().one();
        assert!(matches!(a.add(b), Err(FieldError::Mismatch(..))));
        assert!(matches!(a.mul(b), Err(FieldError::Mismatch(..))));
    }

    #[test]
    fn config_round_trip() {
        let f: FieldSpec = "n=8".parse().unwrap();
        assert_eq!(f.poly(), 0x11b);
        let g: FieldSpec = "n=8 poly=0x11d".parse().unwrap();
        assert_eq!(g.poly(), 0x11d);
        assert_eq!(g.to_string(), "n=8 poly=0x11d");
        assert_eq!(g.to_string().parse::<FieldSpec>().unwrap(), g);
        assert!("poly=0x11b".parse::<FieldSpec>().is_err());
        assert!("n=8 q=3".parse::<FieldSpec>().is_err());
    }

    #[test]
    fn hex_encoding() {
        let f = FieldSpec::new(8).unwrap();
        assert_eq!(f.element(0x2a).unwrap().to_hex(), "2a");
        assert_eq!(f.element(0x2).unwrap().to_hex(), "02");
        let g = FieldSpec::new(9).unwrap();
        assert_eq!(g.element(0x1ff).unwrap().to_hex(), "1ff");
        assert_eq!(g.element(0x5).unwrap().to_be_bytes(), vec![0x00, 0x05]);
        assert_eq!(g.parse_element("1ff").unwrap().value(), 0x1ff);
        assert!(g.parse_element("200").is_err());
        assert!(g.parse_element("zz").is_err());
    }
}
