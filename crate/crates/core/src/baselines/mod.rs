//! Comparison sketches: MinHash and one-permutation hashing with a
//! deletion extension, and random pairing.
//!
//! All three keep `k` registers per user. For memory-equalized comparisons
//! every register is charged [`REGISTER_BITS`] bits regardless of how it is
//! stored.

mod minhash;
mod oph;
mod rp;

pub use minhash::MinHashSketch;
pub use oph::OphSketch;
pub use rp::{RpSketch, RpSlot};

/// Accounting size of one register.
pub const REGISTER_BITS: u64 = 32;

/// Accounted memory of one user's `k`-register sketch.
pub const fn sketch_bits(k: usize) -> u64 {
    REGISTER_BITS * k as u64
}
