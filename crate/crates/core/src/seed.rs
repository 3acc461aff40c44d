//! Counter-based seed derivation.
//!
//! Every random stream in a Monte-Carlo run is keyed by
//! `(master seed, trial index, purpose)`, so a trial's randomness does not
//! depend on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stream in the crate.
pub type SimRng = ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Permutation = 1,
    Rewards = 2,
    Policy = 3,
    Instance = 4,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes the three keys into one 64-bit seed. Each key goes through a full
/// avalanche round before the next is folded in.
pub fn derive_seed(master: u64, trial: u64, purpose: Purpose) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ splitmix64(trial.wrapping_add(GOLDEN)));
    splitmix64(b ^ (purpose as u64).wrapping_mul(GOLDEN))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, trial: u64, purpose: Purpose) -> SimRng {
    rng_from_seed(derive_seed(master, trial, purpose))
}
