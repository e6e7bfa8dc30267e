//! Counter-indexed random streams.
//!
//! Every draw is addressed by `(seed, replicate, role, k, slot)` rather than
//! by position in a sequential generator. Any engine that asks for the
//! perturbation of iteration `k`, or the noise of the `slot`-th measurement of
//! iteration `k`, gets the same numbers, no matter how many pullback steps or
//! penalty evaluations happened before. This is what makes comparisons between
//! algorithms use common random numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::vector::PerturbationVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    Noise,
    Perturbation,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Noise => 0x6e6f_6973_65,
            StreamRole::Perturbation => 0x7065_7274,
        }
    }
}

/// Random source owned by one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    replicate_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, replicate_id: u64) -> Self {
        Self { seed, replicate_id }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicate_id(&self) -> u64 {
        self.replicate_id
    }

    /// Generator for the `slot`-th use of `role` at iteration `k`.
    pub fn generator(&self, role: StreamRole, k: usize, slot: u32) -> ChaCha8Rng {
        let key = [
            self.seed,
            self.replicate_id,
            role.tag(),
            k as u64,
            u64::from(slot),
        ]
        .into_iter()
        .fold(0x243f_6a88_85a3_08d3, |acc, word| splitmix64(acc ^ splitmix64(word)));
        ChaCha8Rng::seed_from_u64(key)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bernoulli ±1 perturbation for SPSA iteration `k`.
pub fn sample_perturbation(dim: usize, rng: &RngStream, k: usize) -> PerturbationVector {
    assert!(dim >= 1, "perturbation dimension must be positive");
    let mut gen = rng.generator(StreamRole::Perturbation, k, 0);
    let signs = (0..dim)
        .map(|_| if gen.random::<bool>() { 1 } else { -1 })
        .collect();
    PerturbationVector::from_signs(signs).expect("signs are ±1 by construction")
}
