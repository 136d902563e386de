//! Uniform interface over the four similarity methods, so the experiment
//! runner can fan one stream out to all of them.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{sketch_bits, MinHashSketch, OphSketch, RpSketch};
use crate::error::{Error, Result};
use crate::hashing::{HashConfig, DEFAULT_UNIVERSE};
use crate::stream::{StreamElement, UserId};
use crate::vos::VosState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    Vos,
    MinHash,
    Oph,
    Rp,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [MethodKind::Vos, MethodKind::MinHash, MethodKind::Oph, MethodKind::Rp];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Vos => "vos",
            MethodKind::MinHash => "minhash",
            MethodKind::Oph => "oph",
            MethodKind::Rp => "rp",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vos" => Ok(MethodKind::Vos),
            "minhash" | "mh" => Ok(MethodKind::MinHash),
            "oph" => Ok(MethodKind::Oph),
            "rp" => Ok(MethodKind::Rp),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected vos, minhash, oph or rp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub s_hat: f64,
    pub j_hat: f64,
}

/// `s = J (n_u + n_v) / (J + 1)`.
pub fn jaccard_to_common(j: f64, n_u: u64, n_v: u64) -> f64 {
    j * (n_u + n_v) as f64 / (j + 1.0)
}

/// `J = s / (n_u + n_v - s)`, reported as 1 when `s` reaches the union bound.
pub fn common_to_jaccard(s: f64, n_u: u64, n_v: u64) -> f64 {
    let total = (n_u + n_v) as f64;
    if total == 0.0 {
        0.0
    } else if total - s > 0.0 {
        s / (total - s)
    } else {
        1.0
    }
}

/// A streaming similarity sketch over all users.
pub trait SimilarityMethod: Send {
    fn kind(&self) -> MethodKind;

    /// Registers per user (the odd-sketch length for VOS).
    fn k(&self) -> usize;

    /// `size_after` is the user's exact set size after `e`.
    fn update(&mut self, e: &StreamElement, size_after: u64) -> Result<()>;

    /// `n_u`, `n_v` are the users' current set sizes.
    fn estimate(&self, u: UserId, v: UserId, n_u: u64, n_v: u64) -> Result<Estimate>;

    /// Accounted sketch memory for `users` users, excluding the set-size counters.
    fn memory_bits(&self, users: u64) -> u64;
}

impl SimilarityMethod for VosState {
    fn kind(&self) -> MethodKind {
        MethodKind::Vos
    }

    fn k(&self) -> usize {
        VosState::k(self)
    }

    fn update(&mut self, e: &StreamElement, _size_after: u64) -> Result<()> {
        VosState::update(self, e)
    }

    fn estimate(&self, u: UserId, v: UserId, _n_u: u64, _n_v: u64) -> Result<Estimate> {
        // a user not yet seen in the stream has an empty set
        if self.count(u).is_none() || self.count(v).is_none() {
            return Ok(Estimate { s_hat: 0.0, j_hat: 0.0 });
        }
        let e = self.estimate_pair(u, v)?;
        Ok(Estimate {
            s_hat: e.s_hat,
            j_hat: e.j_hat,
        })
    }

    fn memory_bits(&self, _users: u64) -> u64 {
        self.m()
    }
}

pub struct MinHashMethod {
    cfg: HashConfig,
    sketches: HashMap<UserId, MinHashSketch>,
    empty: MinHashSketch,
}

impl MinHashMethod {
    pub fn new(cfg: HashConfig) -> Self {
        Self {
            empty: MinHashSketch::new(cfg.k()),
            sketches: HashMap::new(),
            cfg,
        }
    }

    fn sketch(&self, u: UserId) -> &MinHashSketch {
        self.sketches.get(&u).unwrap_or(&self.empty)
    }
}

impl SimilarityMethod for MinHashMethod {
    fn kind(&self) -> MethodKind {
        MethodKind::MinHash
    }

    fn k(&self) -> usize {
        self.cfg.k()
    }

    fn update(&mut self, e: &StreamElement, _size_after: u64) -> Result<()> {
        let k = self.cfg.k();
        self.sketches
            .entry(e.user)
            .or_insert_with(|| MinHashSketch::new(k))
            .update(e.item, e.action, &self.cfg);
        Ok(())
    }

    fn estimate(&self, u: UserId, v: UserId, n_u: u64, n_v: u64) -> Result<Estimate> {
        let j_hat = self.sketch(u).estimate(self.sketch(v));
        Ok(Estimate {
            s_hat: jaccard_to_common(j_hat, n_u, n_v),
            j_hat,
        })
    }

    fn memory_bits(&self, users: u64) -> u64 {
        sketch_bits(self.cfg.k()) * users
    }
}

pub struct OphMethod {
    cfg: HashConfig,
    sketches: HashMap<UserId, OphSketch>,
    empty: OphSketch,
}

impl OphMethod {
    pub fn new(cfg: HashConfig) -> Self {
        Self {
            empty: OphSketch::new(cfg.k()),
            sketches: HashMap::new(),
            cfg,
        }
    }

    fn sketch(&self, u: UserId) -> &OphSketch {
        self.sketches.get(&u).unwrap_or(&self.empty)
    }
}

impl SimilarityMethod for OphMethod {
    fn kind(&self) -> MethodKind {
        MethodKind::Oph
    }

    fn k(&self) -> usize {
        self.cfg.k()
    }

    fn update(&mut self, e: &StreamElement, _size_after: u64) -> Result<()> {
        let k = self.cfg.k();
        self.sketches
            .entry(e.user)
            .or_insert_with(|| OphSketch::new(k))
            .update(e.item, e.action, &self.cfg);
        Ok(())
    }

    fn estimate(&self, u: UserId, v: UserId, n_u: u64, n_v: u64) -> Result<Estimate> {
        let j_hat = self.sketch(u).estimate(self.sketch(v));
        Ok(Estimate {
            s_hat: jaccard_to_common(j_hat, n_u, n_v),
            j_hat,
        })
    }

    fn memory_bits(&self, users: u64) -> u64 {
        sketch_bits(self.cfg.k()) * users
    }
}

pub struct RpMethod {
    k: usize,
    rng: ChaCha8Rng,
    sketches: HashMap<UserId, RpSketch>,
    empty: RpSketch,
}

impl RpMethod {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sketches: HashMap::new(),
            empty: RpSketch::new(k),
        }
    }

    fn sketch(&self, u: UserId) -> &RpSketch {
        self.sketches.get(&u).unwrap_or(&self.empty)
    }
}

impl SimilarityMethod for RpMethod {
    fn kind(&self) -> MethodKind {
        MethodKind::Rp
    }

    fn k(&self) -> usize {
        self.k
    }

    fn update(&mut self, e: &StreamElement, size_after: u64) -> Result<()> {
        let k = self.k;
        self.sketches.entry(e.user).or_insert_with(|| RpSketch::new(k)).update(
            e.item,
            e.action,
            size_after,
            &mut self.rng,
        );
        Ok(())
    }

    fn estimate(&self, u: UserId, v: UserId, n_u: u64, n_v: u64) -> Result<Estimate> {
        let s_hat = self.sketch(u).estimate(self.sketch(v), n_u, n_v);
        Ok(Estimate {
            s_hat,
            j_hat: common_to_jaccard(s_hat, n_u, n_v),
        })
    }

    fn memory_bits(&self, users: u64) -> u64 {
        sketch_bits(self.k) * users
    }
}

/// Sizes and seed for building any method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodParams {
    /// Baseline register count.
    pub k: usize,
    /// VOS odd-sketch length.
    pub k_vos: usize,
    /// VOS shared array size in bits.
    pub m: u64,
    pub seed: u64,
}

pub fn build_method(kind: MethodKind, p: &MethodParams) -> Result<Box<dyn SimilarityMethod>> {
    Ok(match kind {
        MethodKind::Vos => Box::new(VosState::new(HashConfig::new(p.seed, p.k_vos, p.m, DEFAULT_UNIVERSE)?)),
        MethodKind::MinHash => Box::new(MinHashMethod::new(HashConfig::registers(p.seed, p.k)?)),
        MethodKind::Oph => Box::new(OphMethod::new(HashConfig::registers(p.seed, p.k)?)),
        MethodKind::Rp => {
            if p.k == 0 {
                return Err(Error::InvalidConfig("k must be at least 1".into()));
            }
            Box::new(RpMethod::new(p.k, p.seed))
        }
    })
}
