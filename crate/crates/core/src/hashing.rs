//! Seeded hash primitives.
//!
//! Every sketch in this crate draws its randomness from three functions of a
//! single 64-bit seed:
//!
//! * [`HashConfig::item_bin`] assigns an item to one of `k` odd-sketch bins,
//! * [`HashConfig::user_pos`] picks the `j`-th shared-array position of a user,
//! * [`HashConfig::item_value`] is the `j`-th 64-bit item hash used by the
//!   MinHash registers (`j >= 1`) and the OPH permutation (`j == 0`).
//!
//! Independent functions are obtained by mixing the function index into the
//! seed. Range reduction uses the multiply-high trick, so there is no modulo
//! bias and no rejection loop.

use crate::error::{Error, Result};
use crate::stream::{ItemId, UserId};

const BIN_DOMAIN: u64 = 0x243F_6A88_85A3_08D3;
const POS_DOMAIN: u64 = 0x1319_8A2E_0370_7344;
const VALUE_DOMAIN: u64 = 0xA409_3822_299F_31D0;

/// Default OPH universe size.
pub const DEFAULT_UNIVERSE: u64 = 1 << 32;

/// SplitMix64 finalizer.
#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn keyed(key: u64, x: u64) -> u64 {
    mix64(key ^ mix64(x))
}

/// Maps a uniform 64-bit value onto `0..n` by taking the high word of `h * n`.
#[inline]
pub const fn reduce(h: u64, n: u64) -> u64 {
    ((h as u128 * n as u128) >> 64) as u64
}

/// Seed and sizes shared by all hash functions of one sketch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashConfig {
    seed: u64,
    k: usize,
    m: u64,
    p: u64,
    bin_key: u64,
}

impl HashConfig {
    /// `k` registers, `m` shared bits, OPH universe `p`.
    pub fn new(seed: u64, k: usize, m: u64, p: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if m < k as u64 {
            return Err(Error::InvalidConfig(format!("m ({m}) must be >= k ({k})")));
        }
        if p == 0 {
            return Err(Error::InvalidConfig("p must be at least 1".into()));
        }
        Ok(Self {
            seed,
            k,
            m,
            p,
            bin_key: mix64(seed ^ BIN_DOMAIN),
        })
    }

    /// Config for register-only sketches, where the shared array is unused.
    pub fn registers(seed: u64, k: usize) -> Result<Self> {
        Self::new(seed, k, k as u64, DEFAULT_UNIVERSE)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Odd-sketch bin of `item`, in `0..k`.
    #[inline]
    pub fn item_bin(&self, item: ItemId) -> usize {
        reduce(keyed(self.bin_key, item), self.k as u64) as usize
    }

    /// Position of register `j` (in `0..k`) of `user` in the shared array, in `0..m`.
    pub fn user_pos(&self, user: UserId, j: usize) -> Result<u64> {
        if j >= self.k {
            return Err(Error::RegisterOutOfRange { index: j, k: self.k });
        }
        Ok(self.user_pos_unchecked(user, j))
    }

    #[inline]
    pub(crate) fn user_pos_unchecked(&self, user: UserId, j: usize) -> u64 {
        let key = mix64(self.seed ^ POS_DOMAIN ^ mix64(j as u64));
        reduce(keyed(key, user), self.m)
    }

    /// The `j`-th 64-bit hash of `item`, `0 <= j <= k`.
    #[inline]
    pub fn item_value(&self, item: ItemId, j: usize) -> u64 {
        debug_assert!(j <= self.k, "hash function index {j} > k = {}", self.k);
        let key = mix64(self.seed ^ VALUE_DOMAIN ^ mix64(j as u64));
        keyed(key, item)
    }

    /// Key for taking minima: hash value first, item id on ties.
    #[inline]
    pub fn item_key(&self, item: ItemId, j: usize) -> HashKey {
        HashKey {
            value: self.item_value(item, j),
            item,
        }
    }

    /// OPH bin of `item`: its permuted position in `0..p`, split into `k` equal ranges.
    #[inline]
    pub fn oph_bin(&self, value: u64) -> usize {
        let pos = reduce(value, self.p) as u128;
        (pos * self.k as u128 / self.p as u128) as usize
    }
}

/// Hash value with the item id as tie-breaker, giving distinct items distinct keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HashKey {
    pub value: u64,
    pub item: ItemId,
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn cfg(k: usize, m: u64) -> HashConfig {
        HashConfig::new(0x5EED, k, m, DEFAULT_UNIVERSE).unwrap()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(HashConfig::new(1, 0, 10, 1).is_err());
        assert!(HashConfig::new(1, 10, 9, 1).is_err());
        assert!(HashConfig::new(1, 1, 1, 0).is_err());
    }

    #[test]
    fn single_bin_and_single_position() {
        let c = cfg(1, 1);
        for i in 0..1000 {
            assert_eq!(c.item_bin(i), 0);
            assert_eq!(c.user_pos(i, 0).unwrap(), 0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = cfg(64, 1 << 20);
        let b = cfg(64, 1 << 20);
        for x in [0, 1, 42, u64::MAX] {
            assert_eq!(a.item_bin(x), b.item_bin(x));
            assert_eq!(a.user_pos(x, 7).unwrap(), b.user_pos(x, 7).unwrap());
            assert_eq!(a.item_value(x, 3), b.item_value(x, 3));
        }
        let other = HashConfig::new(0x5EEE, 64, 1 << 20, DEFAULT_UNIVERSE).unwrap();
        assert!((0..100).any(|x| other.item_value(x, 0) != a.item_value(x, 0)));
    }

    #[test]
    fn register_index_out_of_range() {
        let c = cfg(8, 64);
        assert!(matches!(
            c.user_pos(1, 8),
            Err(Error::RegisterOutOfRange { index: 8, k: 8 })
        ));
    }

    #[test]
    fn tie_falls_back_to_item_id() {
        let a = HashKey { value: 5, item: 9 };
        let b = HashKey { value: 5, item: 3 };
        assert!(b < a);
        assert!(HashKey { value: 4, item: 100 } < b);
    }

    #[test]
    fn item_bins_are_balanced() {
        let c = cfg(64, 1 << 20);
        let mut counts = [0u64; 64];
        for i in 0..1_000_000u64 {
            counts[c.item_bin(mix64(i ^ 0xABCD))] += 1;
        }
        let max = *counts.iter().max().unwrap() as f64;
        let min = *counts.iter().min().unwrap() as f64;
        assert!(max / min < 1.05, "max/min = {}", max / min);
    }

    #[test]
    fn sequential_items_are_balanced_too() {
        let c = cfg(64, 1 << 20);
        let mut counts = [0u64; 64];
        for i in 0..1_000_000u64 {
            counts[c.item_bin(i)] += 1;
        }
        let max = *counts.iter().max().unwrap() as f64;
        let min = *counts.iter().min().unwrap() as f64;
        assert!(max / min < 1.05, "max/min = {}", max / min);
    }

    #[test]
    fn low_32_bits_pass_chi_square() {
        let c = cfg(16, 1 << 20);
        let bins = 256usize;
        let n = 1_000_000u64;
        let mut counts = vec![0u64; bins];
        for i in 0..n {
            let low = c.item_value(i, 5) as u32;
            counts[(low >> 24) as usize] += 1;
        }
        let expected = n as f64 / bins as f64;
        let stat: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "chi2 = {stat}, critical = {critical}");
    }

    #[test]
    fn user_positions_match_birthday_bound() {
        let k = 10_000usize;
        let m = 1u64 << 20;
        let c = cfg(k, m);
        let mut pos: Vec<u64> = (0..k).map(|j| c.user_pos(77, j).unwrap()).collect();
        pos.sort_unstable();
        let collisions = pos.windows(2).filter(|w| w[0] == w[1]).count() as f64;
        let expected = (k * (k - 1)) as f64 / (2.0 * m as f64);
        let sigma = expected.sqrt();
        assert!(
            (collisions - expected).abs() <= 3.0 * sigma,
            "collisions = {collisions}, expected = {expected}"
        );
    }

    #[test]
    fn user_positions_uncorrelated_across_registers() {
        let m = 1u64 << 20;
        let c = cfg(4, m);
        let n = 100_000u64;
        let xs: Vec<f64> = (0..n).map(|u| c.user_pos(u, 0).unwrap() as f64).collect();
        let ys: Vec<f64> = (0..n).map(|u| c.user_pos(u, 1).unwrap() as f64).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!(r.abs() < 0.01, "correlation {r}");
    }

    #[test]
    fn oph_bins_split_universe_evenly() {
        let c = HashConfig::new(3, 10, 10, 1000).unwrap();
        // positions 0..100 -> bin 0, 900..1000 -> bin 9
        let value_for = |pos: u64| ((pos as u128) << 64).div_ceil(1000) as u64;
        assert_eq!(c.oph_bin(value_for(0)), 0);
        assert_eq!(c.oph_bin(value_for(99)), 0);
        assert_eq!(c.oph_bin(value_for(100)), 1);
        assert_eq!(c.oph_bin(value_for(999)), 9);
    }
}
