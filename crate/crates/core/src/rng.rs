//! Seed splitting.
//!
//! Every random quantity in a run is a pure function of the master seed and
//! a tuple of integer coordinates: `(purpose, trial, slot, ...)`. Coordinates
//! are folded into a 64-bit key with the SplitMix64 finalizer, one word at a
//! time, so distinct tuples give statistically independent keys.
//!
//! Two kinds of consumers exist:
//!
//! * sequential draws (contention ties, quadrature samples) take a
//!   [`ChaCha8Rng`] seeded from the derived key via [`substream`]; short
//!   per-cell sequences such as node positions use [`Stream::small_rng`];
//! * per-element draws that must be reproducible independently of evaluation
//!   order (ALOHA roles per `(slot, node)`, fading per `(slot, tx, rx)`) hash
//!   the full coordinate tuple directly with [`derive`] and map the result
//!   through [`unit_open`] or [`exp1`].
//!
//! Because nothing depends on iteration order, trials can be scheduled on
//! any number of threads and still produce bit-identical results, and two
//! experiments that share a seed share every draw whose coordinates agree
//! (common random numbers).

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// What a derived stream is used for. The discriminant is the first
/// coordinate of every key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Nodes = 1,
    Roles = 2,
    Fading = 3,
    Contention = 4,
    Quadrature = 5,
    Sampling = 6,
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `words` into a key rooted at `seed`.
#[inline]
pub fn derive(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for &w in words {
        h = mix64(h ^ mix64(w.wrapping_add(GOLDEN)));
    }
    h
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Unit-mean exponential variate.
#[inline]
pub fn exp1(bits: u64) -> f64 {
    -unit_open(bits).ln()
}

/// Counter-based stream: a key from which per-element draws are obtained by
/// hashing element coordinates. Cheap to copy and to fork.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream(u64);

impl Stream {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        Stream(derive(seed, &[purpose as u64]))
    }

    pub fn fork(self, words: &[u64]) -> Self {
        Stream(derive(self.0, words))
    }

    #[inline]
    pub fn bits(self, words: &[u64]) -> u64 {
        derive(self.0, words)
    }

    #[inline]
    pub fn uniform(self, words: &[u64]) -> f64 {
        unit_open(self.bits(words))
    }

    #[inline]
    pub fn exp1(self, words: &[u64]) -> f64 {
        exp1(self.bits(words))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Non-cryptographic generator with a cheap setup, for short sequences.
    pub fn small_rng(self) -> SmallRng {
        SmallRng::seed_from_u64(self.0)
    }
}

pub fn substream(seed: u64, purpose: Purpose, words: &[u64]) -> ChaCha8Rng {
    let mut key = derive(seed, &[purpose as u64]);
    key = derive(key, words);
    ChaCha8Rng::seed_from_u64(key)
}
