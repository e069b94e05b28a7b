//! Deterministic randomness management. Every random draw in an experiment
//! comes from a ChaCha stream seeded by the master seed, a domain tag and
//! up to four indices, so any single trial, transmitter or sample is
//! reproducible in isolation and results never depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub(crate) const DOMAIN_EXPERIMENT: u64 = 1;
pub(crate) const DOMAIN_PILOT: u64 = 2;
pub(crate) const DOMAIN_CHANNEL: u64 = 3;
pub(crate) const DOMAIN_NOISE: u64 = 4;
pub(crate) const DOMAIN_CALIBRATION: u64 = 5;

/// Child stream for `(master, domain, indices)`.
pub(crate) fn child_rng(master: u64, domain: u64, indices: [u32; 4]) -> ChaCha12Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&domain.to_le_bytes());
    for (slot, index) in indices.iter().enumerate() {
        let at = 16 + 4 * slot;
        seed[at..at + 4].copy_from_slice(&index.to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}

/// Collapses a child stream to one u64, for deriving sub-master seeds.
pub(crate) fn child_seed(master: u64, domain: u64, indices: [u32; 4]) -> u64 {
    child_rng(master, domain, indices).gen()
}
