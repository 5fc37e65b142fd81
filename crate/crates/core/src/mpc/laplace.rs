//! Distributed Laplace sampling.
//!
//! Laplace(0, b) is infinitely divisible: it is the difference of two
//! Exp(b) = Gamma(1, b) variables, and Gamma(1, b) is the sum of two
//! independent Gamma(1/2, b) variables. Each server therefore draws
//! `G1 - G2` with `G1, G2 ~ Gamma(1/2, b)`, encodes it, and secret-shares it
//! with the other server. The sum of both contributions is Laplace(0, b),
//! and neither server knows the other's contribution.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::share::{share_vec, PartyId, SharedVector};
use super::transport::{inproc_pair, Transport};
use crate::error::{Error, Result};
use crate::ring::FixedPointCodec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseMode {
    /// No perturbation. Only for equivalence testing against plaintext.
    Disabled,
    Laplace {
        scale: f64,
    },
}

impl NoiseMode {
    pub fn laplace(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param(format!(
                "Laplace scale must be positive and finite, got {scale}"
            )));
        }
        Ok(NoiseMode::Laplace { scale })
    }
}

/// This party's half of the noise, in the clear (it never leaves the party
/// unshared).
pub fn local_noise_contribution<R: Rng + ?Sized>(
    mode: NoiseMode,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match mode {
        NoiseMode::Disabled => Ok(vec![0.0; count]),
        NoiseMode::Laplace { scale } => {
            let gamma = Gamma::new(0.5, scale)
                .map_err(|e| Error::param(format!("Laplace scale {scale}: {e}")))?;
            Ok((0..count)
                .map(|_| gamma.sample(rng) - gamma.sample(rng))
                .collect())
        }
    }
}

/// One server's side of the noise protocol. Both servers must call this
/// with the same `mode` and `count`; each ends up with its share of `count`
/// independent Laplace samples.
pub fn pi_lap_party<R, T>(
    party: PartyId,
    mode: NoiseMode,
    count: usize,
    codec: &FixedPointCodec,
    rng: &mut R,
    transport: &mut T,
) -> Result<SharedVector>
where
    R: Rng + ?Sized,
    T: Transport + ?Sized,
{
    let contribution = codec.encode_vec(&local_noise_contribution(mode, count, rng)?)?;
    let (s0, s1) = share_vec(&contribution, rng);
    let (mut keep, outgoing) = match party {
        PartyId::Zero => (s0, s1),
        PartyId::One => (s1, s0),
    };
    transport.send(outgoing.values())?;
    let incoming = transport.recv()?;
    if incoming.len() != count {
        return Err(Error::protocol(format!(
            "noise exchange: expected {count} words from peer, got {}",
            incoming.len()
        )));
    }
    keep.add_assign_local(&SharedVector::new(party, incoming))?;
    Ok(keep)
}

/// Runs both parties over an in-process transport.
pub fn pi_lap<R0, R1>(
    scale: f64,
    count: usize,
    codec: &FixedPointCodec,
    rng0: &mut R0,
    rng1: &mut R1,
) -> Result<(SharedVector, SharedVector)>
where
    R0: Rng + Send + ?Sized,
    R1: Rng + Send + ?Sized,
{
    let mode = NoiseMode::laplace(scale)?;
    run_pair(mode, count, codec, rng0, rng1)
}

pub(crate) fn run_pair<R0, R1>(
    mode: NoiseMode,
    count: usize,
    codec: &FixedPointCodec,
    rng0: &mut R0,
    rng1: &mut R1,
) -> Result<(SharedVector, SharedVector)>
where
    R0: Rng + Send + ?Sized,
    R1: Rng + Send + ?Sized,
{
    if count == 0 {
        return Err(Error::param("noise count must be at least 1"));
    }
    let (mut t0, mut t1) = inproc_pair();
    std::thread::scope(|s| {
        let h0 = s.spawn(|| pi_lap_party(PartyId::Zero, mode, count, codec, rng0, &mut t0));
        let h1 = s.spawn(|| pi_lap_party(PartyId::One, mode, count, codec, rng1, &mut t1));
        let v0 = h0.join().expect("party 0 panicked")?;
        let v1 = h1.join().expect("party 1 panicked")?;
        Ok((v0, v1))
    })
}
