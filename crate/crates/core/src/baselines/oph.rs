use crate::hashing::{HashConfig, HashKey};
use crate::stream::{Action, ItemId};

/// One-permutation hashing: a single hash splits the universe into `k` bins
/// and each register keeps its bin's minimum. Deletions follow the MinHash
/// rule inside the item's own bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OphSketch {
    regs: Vec<Option<HashKey>>,
}

impl OphSketch {
    pub fn new(k: usize) -> Self {
        Self { regs: vec![None; k] }
    }

    pub fn k(&self) -> usize {
        self.regs.len()
    }

    pub fn registers(&self) -> &[Option<HashKey>] {
        &self.regs
    }

    /// O(1): only the item's bin is touched.
    pub fn update(&mut self, item: ItemId, action: Action, cfg: &HashConfig) {
        let key = cfg.item_key(item, 0);
        let reg = &mut self.regs[cfg.oph_bin(key.value)];
        match action {
            Action::Insert => {
                if reg.is_none_or(|cur| key < cur) {
                    *reg = Some(key);
                }
            }
            Action::Delete => {
                if reg.is_some_and(|cur| cur.item == item) {
                    *reg = None;
                }
            }
        }
    }

    /// Matching non-empty bins over bins non-empty in either sketch; 0 when
    /// both are empty.
    pub fn estimate(&self, other: &Self) -> f64 {
        assert_eq!(self.k(), other.k(), "sketches of different size");
        let mut matches = 0usize;
        let mut occupied = 0usize;
        for (a, b) in self.regs.iter().zip(&other.regs) {
            match (a, b) {
                (None, None) => {}
                (Some(x), Some(y)) if x.item == y.item => {
                    matches += 1;
                    occupied += 1;
                }
                _ => occupied += 1,
            }
        }
        if occupied == 0 {
            0.0
        } else {
            matches as f64 / occupied as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::mix64;

    fn cfg(seed: u64, k: usize) -> HashConfig {
        HashConfig::registers(seed, k).unwrap()
    }

    #[test]
    fn one_insert_touches_one_bin() {
        let c = cfg(1, 64);
        let mut sk = OphSketch::new(64);
        sk.update(5, Action::Insert, &c);
        assert_eq!(sk.registers().iter().flatten().count(), 1);
        sk.update(5, Action::Delete, &c);
        assert!(sk.registers().iter().all(Option::is_none));
    }

    #[test]
    fn estimator_edge_cases() {
        let c = cfg(1, 16);
        let mut a = OphSketch::new(16);
        a.update(3, Action::Insert, &c);
        assert_eq!(a.estimate(&a.clone()), 1.0);
        assert_eq!(OphSketch::new(16).estimate(&OphSketch::new(16)), 0.0);
        assert_eq!(a.estimate(&OphSketch::new(16)), 0.0);
    }

    #[test]
    fn bin_keeps_its_minimum() {
        let c = cfg(4, 4);
        let mut sk = OphSketch::new(4);
        for i in 0..200 {
            sk.update(i, Action::Insert, &c);
        }
        for (bin, reg) in sk.registers().iter().enumerate() {
            let expected = (0..200)
                .map(|i| c.item_key(i, 0))
                .filter(|key| c.oph_bin(key.value) == bin)
                .min();
            assert_eq!(*reg, expected);
        }
    }

    #[test]
    fn empty_bin_fraction_matches_occupancy() {
        let k = 64;
        let n = 1000;
        let seeds = 200u64;
        let mut empty = 0usize;
        for seed in 0..seeds {
            let c = cfg(seed, k);
            let mut sk = OphSketch::new(k);
            for x in 0..n {
                sk.update(mix64(seed * 1_000_003 + x), Action::Insert, &c);
            }
            empty += sk.registers().iter().filter(|r| r.is_none()).count();
        }
        let observed = empty as f64 / (seeds as f64 * k as f64);
        let expected = (1.0 - 1.0 / k as f64).powi(n as i32);
        assert!((observed - expected).abs() < 0.02, "{observed} vs {expected}");
    }
}
