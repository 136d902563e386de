use crate::hashing::{HashConfig, HashKey};
use crate::stream::{Action, ItemId};

/// MinHash with the straightforward deletion rule: deleting the item that
/// holds a register empties it, and the register stays empty until a later
/// insertion beats it.
///
/// Register `j` uses hash function `j + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashSketch {
    regs: Vec<Option<HashKey>>,
}

impl MinHashSketch {
    pub fn new(k: usize) -> Self {
        Self { regs: vec![None; k] }
    }

    pub fn k(&self) -> usize {
        self.regs.len()
    }

    pub fn registers(&self) -> &[Option<HashKey>] {
        &self.regs
    }

    /// O(k): every register is inspected.
    pub fn update(&mut self, item: ItemId, action: Action, cfg: &HashConfig) {
        match action {
            Action::Insert => {
                for (j, reg) in self.regs.iter_mut().enumerate() {
                    let key = cfg.item_key(item, j + 1);
                    if reg.is_none_or(|cur| key < cur) {
                        *reg = Some(key);
                    }
                }
            }
            Action::Delete => {
                for reg in &mut self.regs {
                    if reg.is_some_and(|cur| cur.item == item) {
                        *reg = None;
                    }
                }
            }
        }
    }

    /// Fraction of the `k` registers holding the same item in both sketches.
    /// Empty registers never match.
    pub fn estimate(&self, other: &Self) -> f64 {
        assert_eq!(self.k(), other.k(), "sketches of different size");
        let matches = self
            .regs
            .iter()
            .zip(&other.regs)
            .filter(|(a, b)| matches!((a, b), (Some(x), Some(y)) if x.item == y.item))
            .count();
        matches as f64 / self.k() as f64
    }
}
