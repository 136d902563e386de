//! Exact per-user item sets; ground truth and feasibility gate for every other module.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::stream::{Action, ItemId, StreamElement, UserId};

/// Exact similarity of a user pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairTruth {
    /// Common items.
    pub s: u64,
    /// Jaccard coefficient, 0 when both sets are empty.
    pub j: f64,
    /// Size of the symmetric difference.
    pub n_delta: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ExactState {
    sets: HashMap<UserId, HashSet<ItemId>>,
}

impl ExactState {
    /// Applies `e`, rejecting a `+` for a present item or a `-` for an absent
    /// one. Returns the user's set size after the element.
    pub fn apply(&mut self, e: &StreamElement) -> Result<usize> {
        let set = self.sets.entry(e.user).or_default();
        let ok = match e.action {
            Action::Insert => set.insert(e.item),
            Action::Delete => set.remove(&e.item),
        };
        if !ok {
            return Err(Error::Infeasible {
                t: e.t,
                user: e.user,
                item: e.item,
                action: e.action,
            });
        }
        Ok(set.len())
    }

    /// Users seen so far, including those whose sets have emptied.
    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.sets.keys().copied()
    }

    pub fn user_count(&self) -> usize {
        self.sets.len()
    }

    pub fn contains_user(&self, u: UserId) -> bool {
        self.sets.contains_key(&u)
    }

    /// Current set size; 0 for unknown users.
    pub fn size(&self, u: UserId) -> usize {
        self.sets.get(&u).map_or(0, HashSet::len)
    }

    pub fn items(&self, u: UserId) -> Option<&HashSet<ItemId>> {
        self.sets.get(&u)
    }

    /// `|S_u ∩ S_v|`.
    pub fn common(&self, u: UserId, v: UserId) -> Result<u64> {
        let a = self.sets.get(&u).ok_or(Error::UnknownUser(u))?;
        let b = self.sets.get(&v).ok_or(Error::UnknownUser(v))?;
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        Ok(small.iter().filter(|i| large.contains(i)).count() as u64)
    }

    pub fn pair(&self, u: UserId, v: UserId) -> Result<PairTruth> {
        let s = self.common(u, v)?;
        let total = (self.size(u) + self.size(v)) as u64;
        let union = total - s;
        let j = if union == 0 { 0.0 } else { s as f64 / union as f64 };
        Ok(PairTruth {
            s,
            j,
            n_delta: total - 2 * s,
        })
    }
}
