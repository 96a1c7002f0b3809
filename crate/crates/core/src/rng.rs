//! Reproducible random streams.
//!
//! Every stream is a ChaCha20 generator keyed by a 64-bit seed. Derived
//! seeds come from SplitMix64 finalization of `(base, index, purpose)`,
//! so replication `i` draws the same numbers regardless of which thread
//! runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Purpose tags keep streams derived from the same `(base, index)` apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 0,
    IpwInit = 1,
    Folds = 2,
    Pilot = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, index: u64, purpose: Purpose) -> u64 {
    let h = splitmix64(base);
    let h = splitmix64(h ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(h ^ (purpose as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha20Rng::seed_from_u64(seed)
}
