//! Counter-based deterministic random numbers.
//!
//! Synthetic recordings must be bit-reproducible from a single seed, across
//! platforms and across releases, and independent streams (one per generated
//! channel or component) must be addressable without sequencing constraints.
//! A counter-based generator gives all of that: every draw is a pure function
//! of `(seed, stream, index)`, so any sample can be regenerated in isolation
//! and streams never interact.
//!
//! The construction is fixed and documented so other implementations can
//! reproduce it exactly:
//!
//! ```text
//! mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!           z ^= z >> 27; z *= 0x94D049BB133111EB;
//!           z ^= z >> 31; return z            (SplitMix64 finalizer)
//!
//! raw(seed, stream, index) =
//!     mix64( mix64( (seed ^ 0x9E3779B97F4A7C15) + stream * 0xBF58476D1CE4E5B9 )
//!            ^ index * 0x94D049BB133111EB )
//! ```
//!
//! with wrapping 64-bit arithmetic throughout. Uniforms map the top 53 bits
//! into `(0, 1]` (never zero, so logarithms are safe), and Gaussians come
//! from the Box-Muller transform applied to consecutive counter pairs:
//!
//! ```text
//! u1 = unit(raw(seed, stream, 2k));  u2 = unit(raw(seed, stream, 2k + 1))
//! z_{2k}   = sqrt(-2 ln u1) * cos(2 pi u2)
//! z_{2k+1} = sqrt(-2 ln u1) * sin(2 pi u2)
//! ```

use crate::math;

const GOLDEN: u64 = 0x9E3779B97F4A7C15;
const MIX_A: u64 = 0xBF58476D1CE4E5B9;
const MIX_B: u64 = 0x94D049BB133111EB;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
    z ^ (z >> 31)
}

/// Raw 64-bit word for a `(seed, stream, index)` triple.
#[inline]
pub fn raw(seed: u64, stream: u64, index: u64) -> u64 {
    let keyed = mix64((seed ^ GOLDEN).wrapping_add(stream.wrapping_mul(MIX_A)));
    mix64(keyed ^ index.wrapping_mul(MIX_B))
}

/// Uniform draw in the half-open-from-zero interval `(0, 1]`.
#[inline]
pub fn uniform(seed: u64, stream: u64, index: u64) -> f64 {
    // Top 53 bits + 1 scaled by 2^-53: the +1 excludes zero.
    ((raw(seed, stream, index) >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
}

/// Standard normal draw at `index` within a stream.
///
/// Consecutive indices `2k, 2k+1` share one Box-Muller pair; random access
/// recomputes the partner draw, which costs one extra `raw` call.
pub fn normal(seed: u64, stream: u64, index: u64) -> f64 {
    let k = index / 2;
    let u1 = uniform(seed, stream, 2 * k);
    let u2 = uniform(seed, stream, 2 * k + 1);
    let r = math::sqrt(-2.0 * math::ln(u1));
    let theta = math::TAU * u2;
    if index % 2 == 0 {
        r * math::cos(theta)
    } else {
        r * math::sin(theta)
    }
}

/// Fill `out` with standard normals for indices `start..start + out.len()`.
///
/// Equivalent to calling [`normal`] per index but computes each Box-Muller
/// pair once.
pub fn fill_normal(seed: u64, stream: u64, start: u64, out: &mut [f64]) {
    let mut i = 0usize;
    while i < out.len() {
        let index = start + i as u64;
        let k = index / 2;
        let u1 = uniform(seed, stream, 2 * k);
        let u2 = uniform(seed, stream, 2 * k + 1);
        let r = math::sqrt(-2.0 * math::ln(u1));
        let theta = math::TAU * u2;
        if index % 2 == 0 {
            out[i] = r * math::cos(theta);
            if i + 1 < out.len() {
                out[i + 1] = r * math::sin(theta);
                i += 2;
                continue;
            }
        } else {
            out[i] = r * math::sin(theta);
        }
        i += 1;
    }
}
