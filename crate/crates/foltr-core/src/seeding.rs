//! Stable derivation of per-client, per-round RNG streams.
//!
//! Every random decision in a run is drawn from a ChaCha8 stream whose seed
//! is a pure function of `(master_seed, domain, index, round)`. Client
//! execution order or concurrency therefore cannot change results, and the
//! derivation does not depend on platform hashers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for. Keeps independent consumers of the
/// master seed from colliding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedDomain {
    /// Model initialization.
    Init,
    /// One client's local interactions in one round.
    Client,
    /// Attack crafting in one round.
    Attack,
    /// Dataset split / query partitioning.
    Partition,
    /// One repeat of a whole experiment.
    Repeat,
}

impl SeedDomain {
    fn tag(self) -> u64 {
        match self {
            SeedDomain::Init => 0x01,
            SeedDomain::Client => 0x02,
            SeedDomain::Attack => 0x03,
            SeedDomain::Partition => 0x04,
            SeedDomain::Repeat => 0x05,
        }
    }
}

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a 64-bit seed from the master seed and a stream identity.
pub fn derive_seed(master: u64, domain: SeedDomain, index: u64, round: u64) -> u64 {
    let mut h = mix(master ^ 0xD6E8_FEB8_6659_FD93);
    h = mix(h ^ domain.tag());
    h = mix(h ^ index);
    h = mix(h ^ round);
    h
}

/// ChaCha8 stream for the given identity.
pub fn derived_rng(master: u64, domain: SeedDomain, index: u64, round: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, domain, index, round))
}
