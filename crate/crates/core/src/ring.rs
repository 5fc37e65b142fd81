//! Fixed-point reals embedded in the ring of integers modulo 2^64.
//!
//! Every value that crosses a party boundary is a [`RingElement`]. Reals are
//! mapped in with a [`FixedPointCodec`]: scale by `2^f`, round half away from
//! zero, and take the two's-complement residue. The upper half of the ring
//! decodes as negative.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of fractional bits.
pub const DEFAULT_FRACTIONAL_BITS: u32 = 20;

/// A residue modulo 2^64. All arithmetic wraps.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RingElement(pub u64);

impl RingElement {
    pub const ZERO: RingElement = RingElement(0);

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    /// Centered lift: residues `>= 2^63` map to negative integers.
    #[inline]
    pub fn centered(self) -> i64 {
        self.0 as i64
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElement({})", self.0)
    }
}

impl From<u64> for RingElement {
    fn from(v: u64) -> Self {
        RingElement(v)
    }
}

impl Add for RingElement {
    type Output = RingElement;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        RingElement(self.0.wrapping_add(rhs.0))
    }
}

impl AddAssign for RingElement {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl Sub for RingElement {
    type Output = RingElement;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        RingElement(self.0.wrapping_sub(rhs.0))
    }
}

impl SubAssign for RingElement {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_sub(rhs.0);
    }
}

impl Neg for RingElement {
    type Output = RingElement;
    #[inline]
    fn neg(self) -> Self {
        RingElement(self.0.wrapping_neg())
    }
}

impl std::iter::Sum for RingElement {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(RingElement::ZERO, Add::add)
    }
}

pub fn ring_add(a: RingElement, b: RingElement) -> RingElement {
    a + b
}

pub fn ring_neg(a: RingElement) -> RingElement {
    -a
}

/// Signed fixed-point layout with `fractional_bits` bits after the binary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointCodec {
    fractional_bits: u32,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        FixedPointCodec {
            fractional_bits: DEFAULT_FRACTIONAL_BITS,
        }
    }
}

impl FixedPointCodec {
    pub fn new(fractional_bits: u32) -> Result<Self> {
        if fractional_bits == 0 || fractional_bits > 52 {
            return Err(Error::param(format!(
                "fractional bits must be in 1..=52, got {fractional_bits}"
            )));
        }
        Ok(FixedPointCodec { fractional_bits })
    }

    pub fn fractional_bits(&self) -> u32 {
        self.fractional_bits
    }

    /// `2^f`.
    pub fn scale(&self) -> f64 {
        (1u64 << self.fractional_bits) as f64
    }

    /// One unit in the last place, `2^-f`.
    pub fn resolution(&self) -> f64 {
        1.0 / self.scale()
    }

    /// Reals in `[-limit, limit)` are representable, with `limit = 2^(63-f)`.
    pub fn limit(&self) -> f64 {
        (1u64 << (63 - self.fractional_bits)) as f64
    }

    pub fn encode(&self, x: f64) -> Result<RingElement> {
        let limit = self.limit();
        if !x.is_finite() || x < -limit || x >= limit {
            return Err(Error::Range {
                value: x,
                limit,
                bits: self.fractional_bits,
            });
        }
        // f64::round is half-away-from-zero.
        let scaled = (x * self.scale()).round();
        // x < limit can still round up to 2^63 itself.
        if scaled >= 2f64.powi(63) {
            return Err(Error::Range {
                value: x,
                limit,
                bits: self.fractional_bits,
            });
        }
        Ok(RingElement(scaled as i64 as u64))
    }

    pub fn decode(&self, e: RingElement) -> f64 {
        e.centered() as f64 / self.scale()
    }

    pub fn encode_vec(&self, xs: &[f64]) -> Result<Vec<RingElement>> {
        xs.iter().map(|&x| self.encode(x)).collect()
    }

    pub fn decode_vec(&self, es: &[RingElement]) -> Vec<f64> {
        es.iter().map(|&e| self.decode(e)).collect()
    }
}
