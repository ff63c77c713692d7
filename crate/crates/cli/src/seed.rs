//! Per-point seeds for parallel sweeps.
//!
//! Point `i` of a sweep draws from the seed `splitmix64(master + (i + 1)·γ)`
//! with `γ = 0x9E3779B97F4A7C15`, which is the `i`-th output of a SplitMix64
//! stream started at the master seed. Seeds depend only on the master seed
//! and the point index, never on scheduling.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn point_seed(master: u64, index: usize) -> u64 {
    mix(master.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}
