use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{FixedPointCodec, RingElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartyId {
    Zero,
    One,
}

impl PartyId {
    pub const BOTH: [PartyId; 2] = [PartyId::Zero, PartyId::One];

    pub fn index(self) -> usize {
        match self {
            PartyId::Zero => 0,
            PartyId::One => 1,
        }
    }

    pub fn peer(self) -> PartyId {
        match self {
            PartyId::Zero => PartyId::One,
            PartyId::One => PartyId::Zero,
        }
    }
}

/// One party's additive share of a secret ring element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub party: PartyId,
    pub value: RingElement,
}

/// One party's shares of a secret vector.
///
/// There is deliberately no way to decode a `SharedVector` on its own; a
/// plaintext only comes out of [`reveal_to_client`], which needs both halves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedVector {
    party: PartyId,
    values: Vec<RingElement>,
}

impl SharedVector {
    pub fn new(party: PartyId, values: Vec<RingElement>) -> Self {
        SharedVector { party, values }
    }

    /// Shares of the zero vector held by `party`. The two parties' zero
    /// sharings are the trivial `(0, 0)` split.
    pub fn zeros(party: PartyId, len: usize) -> Self {
        SharedVector {
            party,
            values: vec![RingElement::ZERO; len],
        }
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[RingElement] {
        &self.values
    }

    pub fn into_values(self) -> Vec<RingElement> {
        self.values
    }

    /// In-place local addition; no communication.
    pub fn add_assign_local(&mut self, other: &SharedVector) -> Result<()> {
        check_same_party(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += *b;
        }
        Ok(())
    }

    /// In-place local subtraction; no communication.
    pub fn sub_assign_local(&mut self, other: &SharedVector) -> Result<()> {
        check_same_party(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a -= *b;
        }
        Ok(())
    }
}

fn check_same_party(a: &SharedVector, b: &SharedVector) -> Result<()> {
    if a.party != b.party {
        return Err(Error::protocol(format!(
            "cannot combine shares of {:?} and {:?} locally",
            a.party, b.party
        )));
    }
    if a.len() != b.len() {
        return Err(Error::protocol(format!(
            "shared vector length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Splits `x` into `x0 + x1 = x (mod 2^64)` with `x0` uniform.
pub fn share<R: Rng + ?Sized>(x: RingElement, rng: &mut R) -> (Share, Share) {
    let mask = RingElement(rng.random());
    (
        Share {
            party: PartyId::Zero,
            value: mask,
        },
        Share {
            party: PartyId::One,
            value: x - mask,
        },
    )
}

pub fn share_vec<R: Rng + ?Sized>(xs: &[RingElement], rng: &mut R) -> (SharedVector, SharedVector) {
    let (v0, v1) = xs
        .iter()
        .map(|&x| {
            let (s0, s1) = share(x, rng);
            (s0.value, s1.value)
        })
        .unzip();
    (
        SharedVector::new(PartyId::Zero, v0),
        SharedVector::new(PartyId::One, v1),
    )
}

pub fn reconstruct(s0: Share, s1: Share) -> Result<RingElement> {
    if s0.party != PartyId::Zero || s1.party != PartyId::One {
        return Err(Error::protocol(format!(
            "reconstruct expects shares of parties (0, 1), got ({:?}, {:?})",
            s0.party, s1.party
        )));
    }
    Ok(s0.value + s1.value)
}

pub fn reconstruct_vec(v0: &SharedVector, v1: &SharedVector) -> Result<Vec<RingElement>> {
    if v0.party != PartyId::Zero || v1.party != PartyId::One {
        return Err(Error::protocol(format!(
            "reconstruct expects shares of parties (0, 1), got ({:?}, {:?})",
            v0.party, v1.party
        )));
    }
    if v0.len() != v1.len() {
        return Err(Error::protocol(format!(
            "shared vector length mismatch: {} vs {}",
            v0.len(),
            v1.len()
        )));
    }
    Ok(v0
        .values
        .iter()
        .zip(&v1.values)
        .map(|(&a, &b)| a + b)
        .collect())
}

pub fn share_add_local(a: &SharedVector, b: &SharedVector) -> Result<SharedVector> {
    let mut out = a.clone();
    out.add_assign_local(b)?;
    Ok(out)
}

/// What a client does with the two servers' responses: sum the shares and
/// decode.
pub fn reveal_to_client(
    v0: &SharedVector,
    v1: &SharedVector,
    codec: &FixedPointCodec,
) -> Result<Vec<f64>> {
    Ok(codec.decode_vec(&reconstruct_vec(v0, v1)?))
}
