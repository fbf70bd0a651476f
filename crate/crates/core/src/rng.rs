//! Counter-based random number generation for reproducible parallel Monte Carlo.
//!
//! Every Gaussian increment is a pure function of `(seed, stream, step)`, where
//! `stream` encodes the site and state component. Realizations are therefore
//! independent of evaluation order and of how work is distributed over threads.
//! The mixer is the SplitMix64 finalizer applied to the packed key.

use std::f64::consts::PI;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapse a key tuple into one well-mixed 64-bit word.
#[inline]
fn mix_key(seed: u64, stream: u64, step: u64, word: u64) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    h = mix64(h ^ stream.wrapping_mul(0xA24B_AED4_963E_E407));
    h = mix64(h ^ step.wrapping_mul(0x9FB2_1C65_1E98_DF25));
    mix64(h ^ word)
}

/// Uniform in (0, 1]; never returns 0 so it is safe under `ln`.
#[inline]
fn uniform_open(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 / 9007199254740992.0
}

/// Two independent standard normals for the increment keyed by
/// `(seed, stream, step)` via Box-Muller.
#[inline]
pub fn normal_pair(seed: u64, stream: u64, step: u64) -> (f64, f64) {
    let u1 = uniform_open(mix_key(seed, stream, step, 0));
    let u2 = uniform_open(mix_key(seed, stream, step, 1));
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * PI * u2;
    (r * phi.cos(), r * phi.sin())
}

/// One standard normal for the increment keyed by `(seed, stream, step)`.
#[inline]
pub fn normal(seed: u64, stream: u64, step: u64) -> f64 {
    normal_pair(seed, stream, step).0
}

/// Derive a child seed, e.g. per grid cell or per noise realization.
/// `tag` separates independent families of children.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    mix_key(base, tag, index, 2)
}

/// Seed-derivation tags used across the crate.
pub mod tags {
    /// Children indexed by Monte Carlo realization.
    pub const REALIZATION: u64 = 1;
    /// Children indexed by sweep-grid cell.
    pub const GRID_CELL: u64 = 2;
}
