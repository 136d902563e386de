//! Virtual odd sketch.
//!
//! Each user `u` owns a k-bit odd sketch whose bit `j` is the parity of the
//! number of its items hashed to bin `j`. The sketch is never stored on its
//! own. Its bit `j` lives at position `f_j(u)` of one shared m-bit array, so
//! inserting or deleting item `i` flips exactly one bit, `f_{bin(i)}(u)`.
//! Bits of other users landing on the same positions contaminate the rebuilt
//! sketch; the fraction of 1-bits in the array, `beta`, is the contamination
//! rate, and the estimator corrects for it.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hashing::HashConfig;
use crate::stream::{Action, ItemId, StreamElement, UserId};

/// Smallest shared array size picked by [`default_m`].
pub const MIN_DEFAULT_M: u64 = 1 << 16;

const MAGIC: [u8; 4] = *b"VOSK";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 * 5;

/// Shared array size for a memory budget of `requested` bits, raised to at least [`MIN_DEFAULT_M`].
pub fn default_m(requested: u64) -> u64 {
    requested.max(MIN_DEFAULT_M)
}

#[inline]
fn word_count(bits: u64) -> usize {
    bits.div_ceil(64) as usize
}

/// A packed k-bit odd sketch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OddSketch {
    words: Vec<u64>,
    len: usize,
}

impl OddSketch {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; word_count(len as u64)],
            len,
        }
    }

    /// The exact odd sketch of an item set.
    pub fn from_items<I: IntoIterator<Item = ItemId>>(items: I, cfg: &HashConfig) -> Self {
        let mut sk = Self::zeros(cfg.k());
        for i in items {
            sk.flip(cfg.item_bin(i));
        }
        sk
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.len, "bit {j} out of range 0..{}", self.len);
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn flip(&mut self, j: usize) {
        assert!(j < self.len, "bit {j} out of range 0..{}", self.len);
        self.words[j / 64] ^= 1 << (j % 64);
    }

    #[inline]
    fn set(&mut self, j: usize, bit: bool) {
        self.words[j / 64] |= (bit as u64) << (j % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "odd sketches of different length");
        Self {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
            len: self.len,
        }
    }

    /// Number of positions where the two sketches differ.
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "odd sketches of different length");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|j| self.get(j))
    }
}

/// Similarity estimate for one user pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEstimate {
    /// Estimated size of the symmetric difference.
    pub n_delta_hat: f64,
    /// Estimated number of common items.
    pub s_hat: f64,
    /// Estimated Jaccard coefficient.
    pub j_hat: f64,
    /// Fraction of 1-bits in the xor of the two rebuilt sketches.
    pub alpha: f64,
    /// A logarithm argument was clamped, or `s_hat` exceeded the union bound.
    pub saturated: bool,
}

impl PairEstimate {
    /// Estimates from the observed xor density `alpha`, array density `beta`,
    /// sketch length `k` and the two users' item counts.
    ///
    /// `|1 - 2 alpha|` and `|1 - 2 beta|` are clamped below at `1 / (2k)`.
    pub fn from_parts(alpha: f64, beta: f64, k: usize, n_u: u64, n_v: u64) -> Self {
        let k = k as f64;
        let eps = 1.0 / (2.0 * k);
        let la = (1.0 - 2.0 * alpha).abs();
        let lb = (1.0 - 2.0 * beta).abs();
        let mut saturated = la < eps || lb < eps;
        let log_term = la.max(eps).ln() - 2.0 * lb.max(eps).ln();

        let total = (n_u + n_v) as f64;
        let n_delta_hat = -k * log_term / 2.0;
        let s_hat = total / 2.0 + k * log_term / 4.0;
        let union = total - s_hat;
        let j_hat = if union > 0.0 {
            s_hat / union
        } else {
            saturated = true;
            1.0
        };
        Self {
            n_delta_hat,
            s_hat,
            j_hat,
            alpha,
            saturated,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..0.5).contains(&beta) {
        Ok(())
    } else {
        Err(Error::Domain("beta must lie in [0, 1/2)"))
    }
}

/// Closed-form approximation of `E(s_hat)` for a pair with `n_delta`
/// differing items and `s` common items.
pub fn expected_s_hat(n_delta: f64, beta: f64, k: usize, s: f64) -> Result<f64> {
    check_beta(beta)?;
    let k = k as f64;
    let clean = 1.0 - 2.0 * beta;
    Ok(s + 0.125
        - k * beta * (2.0 * n_delta / k).exp() / clean.powi(2)
        - (4.0 * n_delta / k).exp() / (8.0 * clean.powi(4)))
}

/// Closed-form approximation of `Var(s_hat)`.
pub fn variance_s_hat(n_delta: f64, beta: f64, k: usize) -> Result<f64> {
    check_beta(beta)?;
    let k = k as f64;
    let clean = 1.0 - 2.0 * beta;
    Ok(-k / 16.0
        + k * k * beta * (2.0 * n_delta / k).exp() / (2.0 * clean.powi(2))
        + k * (4.0 * n_delta / k).exp() / (16.0 * clean.powi(4)))
}

/// Shared bit array, its 1-bit count, and per-user item counters.
///
/// Updates need `&mut self`; estimation borrows immutably, so concurrent
/// readers are fine between updates. Clone to fork independent runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VosState {
    cfg: HashConfig,
    words: Vec<u64>,
    ones: u64,
    counts: HashMap<UserId, u64>,
}

impl VosState {
    pub fn new(cfg: HashConfig) -> Self {
        Self {
            words: vec![0; word_count(cfg.m())],
            ones: 0,
            counts: HashMap::new(),
            cfg,
        }
    }

    pub fn config(&self) -> &HashConfig {
        &self.cfg
    }

    pub fn k(&self) -> usize {
        self.cfg.k()
    }

    pub fn m(&self) -> u64 {
        self.cfg.m()
    }

    /// Fraction of 1-bits in the shared array.
    pub fn beta(&self) -> f64 {
        self.ones as f64 / self.cfg.m() as f64
    }

    /// Number of 1-bits, maintained incrementally.
    pub fn ones(&self) -> u64 {
        self.ones
    }

    /// Number of 1-bits, recounted from the array.
    pub fn popcount(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn count(&self, u: UserId) -> Option<u64> {
        self.counts.get(&u).copied()
    }

    pub fn user_count(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn bit(&self, pos: u64) -> bool {
        self.words[(pos / 64) as usize] >> (pos % 64) & 1 == 1
    }

    /// Shared array plus one 64-bit counter per user.
    pub fn memory_bits(&self) -> u64 {
        self.cfg.m() + 64 * self.counts.len() as u64
    }

    /// Applies one element: flips bit `f_{bin(i)}(u)` and moves `n_u`.
    ///
    /// Fails without touching the state if a deletion would make `n_u`
    /// negative.
    pub fn update(&mut self, e: &StreamElement) -> Result<()> {
        match e.action {
            Action::Insert => *self.counts.entry(e.user).or_insert(0) += 1,
            Action::Delete => match self.counts.get_mut(&e.user) {
                Some(n) if *n > 0 => *n -= 1,
                _ => {
                    return Err(Error::Infeasible {
                        t: e.t,
                        user: e.user,
                        item: e.item,
                        action: e.action,
                    })
                }
            },
        }
        let pos = self.cfg.user_pos_unchecked(e.user, self.cfg.item_bin(e.item));
        self.flip(pos);
        Ok(())
    }

    #[inline]
    fn flip(&mut self, pos: u64) {
        let word = &mut self.words[(pos / 64) as usize];
        let mask = 1u64 << (pos % 64);
        *word ^= mask;
        if *word & mask != 0 {
            self.ones += 1;
        } else {
            self.ones -= 1;
        }
    }

    /// The `k` bits `A[f_1(u)], ..., A[f_k(u)]`.
    pub fn rebuild(&self, u: UserId) -> OddSketch {
        let k = self.cfg.k();
        let mut sk = OddSketch::zeros(k);
        for j in 0..k {
            sk.set(j, self.bit(self.cfg.user_pos_unchecked(u, j)));
        }
        sk
    }

    pub fn estimate_pair(&self, u: UserId, v: UserId) -> Result<PairEstimate> {
        if u == v {
            return Err(Error::SameUser(u));
        }
        let n_u = self.count(u).ok_or(Error::UnknownUser(u))?;
        let n_v = self.count(v).ok_or(Error::UnknownUser(v))?;
        let diff = self.rebuild(u).hamming(&self.rebuild(v));
        let alpha = diff as f64 / self.cfg.k() as f64;
        Ok(PairEstimate::from_parts(alpha, self.beta(), self.cfg.k(), n_u, n_v))
    }

    /// Checkpoint layout, all integers little-endian:
    ///
    /// ```text
    /// "VOSK" | version u32 | m u64 | k u64 | seed u64 | p u64 | ones u64
    /// array words u64 x ceil(m/64)
    /// users u64 | (user u64, count u64) x users, sorted by user
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.words.len() + 8 + 16 * self.counts.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for x in [
            self.cfg.m(),
            self.cfg.k() as u64,
            self.cfg.seed(),
            self.cfg.p(),
            self.ones,
        ] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        let mut users: Vec<_> = self.counts.iter().collect();
        users.sort_unstable();
        out.extend_from_slice(&(users.len() as u64).to_le_bytes());
        for (u, n) in users {
            out.extend_from_slice(&u.to_le_bytes());
            out.extend_from_slice(&n.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Decode(format!("unsupported version {version}")));
        }
        let m = r.u64()?;
        let k = usize::try_from(r.u64()?).map_err(|_| Error::Decode("k overflows usize".into()))?;
        let seed = r.u64()?;
        let p = r.u64()?;
        let ones = r.u64()?;
        let cfg = HashConfig::new(seed, k, m, p).map_err(|e| Error::Decode(e.to_string()))?;

        let n_words = word_count(m);
        if (bytes.len() as u64) < (HEADER_LEN as u64).saturating_add(8 * n_words as u64) {
            return Err(Error::Decode("truncated bit array".into()));
        }
        let mut words = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            words.push(r.u64()?);
        }
        if m % 64 != 0 && words[n_words - 1] >> (m % 64) != 0 {
            return Err(Error::Decode("bits set beyond m".into()));
        }
        let popcount: u64 = words.iter().map(|w| w.count_ones() as u64).sum();
        if popcount != ones {
            return Err(Error::Decode(format!(
                "1-bit count {ones} disagrees with array popcount {popcount}"
            )));
        }

        let users = r.u64()?;
        let mut counts = HashMap::new();
        for _ in 0..users {
            let u = r.u64()?;
            let n = r.u64()?;
            if counts.insert(u, n).is_some() {
                return Err(Error::Decode(format!("duplicate user {u}")));
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::Decode(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self {
            cfg,
            words,
            ones,
            counts,
        })
    }

    #[cfg(test)]
    fn fill(&mut self, bit: bool) {
        let m = self.cfg.m();
        for pos in 0..m {
            if self.bit(pos) != bit {
                self.flip(pos);
            }
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::Decode("unexpected end of input".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
