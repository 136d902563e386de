use rand::Rng;

use crate::stream::{Action, ItemId};

/// A size-1 random-pairing sampler.
///
/// `d1` counts uncompensated deletions that removed the sample, `d2` the
/// other uncompensated deletions. Later insertions pair off against these
/// deletions before ordinary reservoir sampling resumes, which keeps the
/// sample uniform over the live set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RpSlot {
    pub sample: Option<ItemId>,
    pub d1: u64,
    pub d2: u64,
}

impl RpSlot {
    /// `size_after` is the user's set size after this element.
    pub fn update<R: Rng + ?Sized>(&mut self, item: ItemId, action: Action, size_after: u64, rng: &mut R) {
        match action {
            Action::Delete => {
                if self.sample == Some(item) {
                    self.sample = None;
                    self.d1 += 1;
                } else {
                    self.d2 += 1;
                }
            }
            Action::Insert => {
                let pending = self.d1 + self.d2;
                if pending == 0 {
                    if self.sample.is_none() || rng.random_range(0..size_after.max(1)) == 0 {
                        self.sample = Some(item);
                    }
                } else if rng.random_range(0..pending) < self.d1 {
                    self.sample = Some(item);
                    self.d1 -= 1;
                } else {
                    self.d2 -= 1;
                }
            }
        }
    }
}

/// `k` independent random-pairing samplers over one user's items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpSketch {
    slots: Vec<RpSlot>,
}

impl RpSketch {
    pub fn new(k: usize) -> Self {
        Self {
            slots: vec![RpSlot::default(); k],
        }
    }

    pub fn k(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[RpSlot] {
        &self.slots
    }

    pub fn update<R: Rng + ?Sized>(&mut self, item: ItemId, action: Action, size_after: u64, rng: &mut R) {
        for slot in &mut self.slots {
            slot.update(item, action, size_after, rng);
        }
    }

    /// Common-item estimate `n_a * n_b * (matches / k')`, where `k'` counts
    /// slots sampled in both sketches. Returns 0 when `k' = 0`.
    pub fn estimate(&self, other: &Self, n_a: u64, n_b: u64) -> f64 {
        assert_eq!(self.k(), other.k(), "sketches of different size");
        let mut usable = 0usize;
        let mut matches = 0usize;
        for (a, b) in self.slots.iter().zip(&other.slots) {
            if let (Some(x), Some(y)) = (a.sample, b.sample) {
                usable += 1;
                matches += (x == y) as usize;
            }
        }
        if usable == 0 {
            0.0
        } else {
            n_a as f64 * n_b as f64 * matches as f64 / usable as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_item_is_always_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let mut slot = RpSlot::default();
            slot.update(9, Action::Insert, 1, &mut rng);
            assert_eq!(slot.sample, Some(9));
        }
    }

    #[test]
    fn deleting_the_sample_records_d1() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut slot = RpSlot::default();
        slot.update(9, Action::Insert, 1, &mut rng);
        slot.update(9, Action::Delete, 0, &mut rng);
        assert_eq!(
            slot,
            RpSlot {
                sample: None,
                d1: 1,
                d2: 0
            }
        );
    }

    #[test]
    fn compensating_insert_refills_the_slot() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut slot = RpSlot::default();
        slot.update(9, Action::Insert, 1, &mut rng);
        slot.update(9, Action::Delete, 0, &mut rng);
        slot.update(4, Action::Insert, 1, &mut rng);
        assert_eq!(
            slot,
            RpSlot {
                sample: Some(4),
                d1: 0,
                d2: 0
            }
        );
    }

    #[test]
    fn sample_is_uniform_after_deletions() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let runs = 20_000;
        let mut freq = std::collections::HashMap::<ItemId, usize>::new();
        for _ in 0..runs {
            let mut live: Vec<ItemId> = Vec::new();
            let mut slot = RpSlot::default();
            for i in 1..=10 {
                live.push(i);
                slot.update(i, Action::Insert, live.len() as u64, &mut rng);
            }
            live.shuffle(&mut rng);
            for i in live.drain(..5).collect::<Vec<_>>() {
                slot.update(i, Action::Delete, live.len() as u64, &mut rng);
            }
            for i in 11..=15 {
                live.push(i);
                slot.update(i, Action::Insert, live.len() as u64, &mut rng);
            }
            let s = slot.sample.expect("pending deletions are fully compensated");
            assert!(live.contains(&s));
            *freq.entry(s).or_default() += 1;
        }
        // 5 fresh items always survive; each of the 10 live items should appear 1/10 of the time
        for i in 11..=15 {
            let f = freq[&i] as f64 / runs as f64;
            assert!((f - 0.1).abs() < 0.01, "item {i}: {f}");
        }
        let total: usize = freq.values().sum();
        assert_eq!(total, runs);
    }

    #[test]
    fn singleton_sets_sharing_their_item() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = RpSketch::new(8);
        let mut b = RpSketch::new(8);
        a.update(5, Action::Insert, 1, &mut rng);
        b.update(5, Action::Insert, 1, &mut rng);
        assert_eq!(a.estimate(&b, 1, 1), 1.0);
        assert_eq!(RpSketch::new(8).estimate(&b, 0, 1), 0.0);
    }

    #[test]
    fn disjoint_sets_never_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut total = 0.0;
        for _ in 0..2000 {
            let mut a = RpSketch::new(16);
            let mut b = RpSketch::new(16);
            for i in 0..20 {
                a.update(i, Action::Insert, i + 1, &mut rng);
                b.update(100 + i, Action::Insert, i + 1, &mut rng);
            }
            total += a.estimate(&b, 20, 20);
        }
        assert_eq!(total, 0.0);
    }
}
