//! Keyed 64-bit hashing used for every pseudo-random quantity in the crate.
//!
//! There is no global RNG. A Bernoulli configuration is the pure function
//! `g -> coordinate_hash(seed, g)`, and per-sample seeds are derived from the
//! master seed by index, so results never depend on evaluation order.
//!
//! The algorithm is fixed:
//!
//! ```text
//! splitmix64(z):
//!     z  = z + 0x9E3779B97F4A7C15               (wrapping)
//!     z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 (wrapping)
//!     z  = (z ^ (z >> 27)) * 0x94D049BB133111EB (wrapping)
//!     return z ^ (z >> 31)
//!
//! coordinate_hash(seed, g = (c_1, ..., c_d)):
//!     h = splitmix64(seed ^ 0x636f6f7264696e61)   // "coordina"
//!     h = splitmix64(h ^ d)
//!     for c in c_1..c_d: h = splitmix64(h ^ (c as two's-complement u64))
//!     return h
//! ```
//!
//! Test vectors (`seed`, coordinates, hash):
//!
//! | seed | g | `coordinate_hash` |
//! |------|---|-------------------|
//! | 0 | `0` | `0x7c4d4f9dc47f29ef` |
//! | 1 | `0` | `0x4ca35e07391f1101` |
//! | 7 | `3` | `0x6f300c8129e879ee` |
//! | 42 | `(-5,2)` | `0x2c2b6b5e35320bf4` |
//! | `u64::MAX` | `(1,-1,4)` | `0xf8986c0c0e32af3e` |

use crate::group::GroupElement;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const COORDINATE_DOMAIN: u64 = 0x636f_6f72_6469_6e61;
const SAMPLE_DOMAIN: u64 = 0x7361_6d70_6c65_7365;
const ROTATION_DOMAIN: u64 = 0x726f_7461_7469_6f6e;
const WALK_DOMAIN: u64 = 0x7761_6c6b_7374_6570;

#[inline]
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn coordinate_hash(seed: u64, g: &GroupElement) -> u64 {
    let mut h = splitmix64(seed ^ COORDINATE_DOMAIN);
    h = splitmix64(h ^ g.dim() as u64);
    for &c in g.coords() {
        h = splitmix64(h ^ c as u64);
    }
    h
}

/// Seed of the `index`-th Monte-Carlo sample under `master`.
#[inline]
pub fn sample_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ SAMPLE_DOMAIN) ^ index)
}

/// Starting phase in `[0, 1)` of a rotation point.
#[inline]
pub fn rotation_phase(seed: u64) -> f64 {
    unit_interval(splitmix64(seed ^ ROTATION_DOMAIN))
}

/// The `word`-th block of 64 random bits for a walk trial.
#[inline]
pub fn walk_bits(trial_seed: u64, word: u64) -> u64 {
    splitmix64(splitmix64(trial_seed ^ WALK_DOMAIN) ^ word)
}

/// Top 53 bits mapped to `[0, 1)`.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
