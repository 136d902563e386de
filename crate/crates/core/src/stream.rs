//! Stream elements, edge-list ingestion, and synthesis of fully dynamic streams.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::hashing::mix64;
use crate::oracle::ExactState;

pub type UserId = u64;
pub type ItemId = u64;

/// Subscription (`+`) or unsubscription (`-`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Insert,
    Delete,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Insert => "+",
            Action::Delete => "-",
        })
    }
}

/// One edge event; `t` is the 1-based stream position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamElement {
    pub t: u64,
    pub user: UserId,
    pub item: ItemId,
    pub action: Action,
}

impl StreamElement {
    pub fn insert(t: u64, user: UserId, item: ItemId) -> Self {
        Self {
            t,
            user,
            item,
            action: Action::Insert,
        }
    }

    pub fn delete(t: u64, user: UserId, item: ItemId) -> Self {
        Self {
            t,
            user,
            item,
            action: Action::Delete,
        }
    }
}

/// Insertion-only edge list read from disk.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub edges: Vec<(UserId, ItemId)>,
    /// Repeated `(u, i)` lines that were dropped.
    pub duplicates: usize,
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads whitespace-separated `u i` lines. Blank lines and lines starting
/// with `#` are skipped; repeated edges are dropped and counted.
pub fn load_edges(path: impl AsRef<Path>) -> Result<EdgeList> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    let mut seen = HashSet::new();
    let mut out = EdgeList::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let mut fields = trimmed.split_whitespace();
        let (Some(u), Some(i), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected two integers, got {trimmed:?}")));
        };
        let u: UserId = u.parse().map_err(|e| parse_err(format!("bad user id {u:?}: {e}")))?;
        let i: ItemId = i.parse().map_err(|e| parse_err(format!("bad item id {i:?}: {e}")))?;
        if seen.insert((u, i)) {
            out.edges.push((u, i));
        } else {
            out.duplicates += 1;
        }
    }
    if out.duplicates > 0 {
        log::warn!("{}: dropped {} duplicate edge(s)", path.display(), out.duplicates);
    }
    Ok(out)
}

/// Parameters of the massive-deletion protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct DynConfig {
    /// Probability, after each insertion, of a massive-deletion event.
    pub q: f64,
    /// Probability that each live edge is deleted during an event.
    pub d: f64,
    pub seed: u64,
    /// Re-queue deleted base edges (once) as fresh insertions at the end of the stream.
    pub recycle: bool,
    /// Insertion counts after which an event is forced, in addition to the random trigger.
    pub delete_after: Vec<usize>,
}

impl Default for DynConfig {
    fn default() -> Self {
        Self {
            q: 1.0 / 2_000_000.0,
            d: 0.5,
            seed: 0,
            recycle: false,
            delete_after: Vec::new(),
        }
    }
}

impl DynConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidConfig(format!("q = {} not in [0, 1]", self.q)));
        }
        if !(0.0..=1.0).contains(&self.d) {
            return Err(Error::InvalidConfig(format!("d = {} not in [0, 1]", self.d)));
        }
        Ok(())
    }
}

/// Turns an insertion sequence into a feasible fully dynamic stream.
///
/// Base insertions are emitted in order. After each insertion a deletion
/// event fires with probability `q` (or unconditionally at the positions in
/// `delete_after`); during an event every live edge is deleted independently
/// with probability `d`, and the deletions are emitted in shuffled order.
/// A base edge that is already live is skipped.
pub fn synthesize_dynamic(base: &[(UserId, ItemId)], cfg: &DynConfig) -> Result<Vec<StreamElement>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed ^ 0xD15C_0DE5));
    let forced: HashSet<usize> = cfg.delete_after.iter().copied().collect();
    let mut pending: VecDeque<(UserId, ItemId)> = base.iter().copied().collect();
    let mut live: BTreeSet<(UserId, ItemId)> = BTreeSet::new();
    let mut recycled: HashSet<(UserId, ItemId)> = HashSet::new();
    let mut out = Vec::with_capacity(base.len());
    let mut inserted = 0usize;
    let mut skipped = 0usize;

    while let Some((u, i)) = pending.pop_front() {
        if !live.insert((u, i)) {
            skipped += 1;
            continue;
        }
        out.push(StreamElement::insert(out.len() as u64 + 1, u, i));
        inserted += 1;

        let fire = forced.contains(&inserted) || (cfg.q > 0.0 && rng.random_bool(cfg.q));
        if !fire {
            continue;
        }
        let mut doomed: Vec<(UserId, ItemId)> = live
            .iter()
            .copied()
            .filter(|_| cfg.d > 0.0 && rng.random_bool(cfg.d))
            .collect();
        doomed.shuffle(&mut rng);
        for (u, i) in doomed {
            live.remove(&(u, i));
            out.push(StreamElement::delete(out.len() as u64 + 1, u, i));
            if cfg.recycle && recycled.insert((u, i)) {
                pending.push_back((u, i));
            }
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} base insertion(s) of already-live edges");
    }
    Ok(out)
}

/// Random bipartite graph with Zipf-distributed user activity and item popularity.
///
/// Heavy users concentrate on popular items, so the top-degree users overlap.
pub fn synthetic_edges(users: u64, items: u64, edges: usize, seed: u64) -> Result<Vec<(UserId, ItemId)>> {
    if users == 0 || items == 0 {
        return Err(Error::InvalidConfig("synthetic graph needs users and items".into()));
    }
    let capacity = users.saturating_mul(items);
    if edges as u64 > capacity / 2 {
        return Err(Error::InvalidConfig(format!(
            "{edges} edges is too dense for {users} users x {items} items"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0x6EA9_4ED6));
    let user_dist = Zipf::new(users as f64, 0.9).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let item_dist = Zipf::new(items as f64, 0.8).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut seen = HashSet::with_capacity(edges);
    let mut out = Vec::with_capacity(edges);
    while out.len() < edges {
        let u = user_dist.sample(&mut rng) as u64 - 1;
        let i = item_dist.sample(&mut rng) as u64 - 1;
        if seen.insert((u, i)) {
            out.push((u, i));
        }
    }
    Ok(out)
}

/// Graph of dense user communities over a sparse background.
///
/// Each community owns a pool of `pool` items and has `members` users, each
/// subscribed to `degree` distinct items of that pool. Background users
/// subscribe to `background_degree` items drawn from the whole universe of
/// `4 * communities * pool` items. Edges are returned in shuffled order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommunityGraph {
    pub communities: usize,
    pub members: usize,
    pub pool: usize,
    pub degree: usize,
    pub background_users: usize,
    pub background_degree: usize,
}

impl CommunityGraph {
    pub fn edges(&self, seed: u64) -> Result<Vec<(UserId, ItemId)>> {
        let universe = 4 * self.communities as u64 * self.pool as u64;
        if self.degree > self.pool {
            return Err(Error::InvalidConfig(format!(
                "degree {} exceeds pool size {}",
                self.degree, self.pool
            )));
        }
        if self.background_degree as u64 > universe / 2 {
            return Err(Error::InvalidConfig(format!(
                "background degree {} too large for {universe} items",
                self.background_degree
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0xC0DE_C0DE));
        let mut edges = Vec::with_capacity(
            self.communities * self.members * self.degree + self.background_users * self.background_degree,
        );
        let mut pool: Vec<ItemId> = Vec::with_capacity(self.pool);
        for c in 0..self.communities {
            let first = (c * self.pool) as ItemId;
            for m in 0..self.members {
                let user = (c * self.members + m) as UserId;
                pool.clear();
                pool.extend(first..first + self.pool as ItemId);
                let (chosen, _) = pool.partial_shuffle(&mut rng, self.degree);
                edges.extend(chosen.iter().map(|&i| (user, i)));
            }
        }
        let first_bg = (self.communities * self.members) as UserId;
        for b in 0..self.background_users as UserId {
            let mut items = HashSet::with_capacity(self.background_degree);
            while items.len() < self.background_degree {
                let i = rng.random_range(0..universe);
                if items.insert(i) {
                    edges.push((first_bg + b, i));
                }
            }
        }
        edges.shuffle(&mut rng);
        Ok(edges)
    }
}

/// Writes `t u i a` lines.
pub fn write_stream_dump<W: Write>(mut w: W, stream: &[StreamElement]) -> io::Result<()> {
    for e in stream {
        writeln!(w, "{} {} {} {}", e.t, e.user, e.item, e.action)?;
    }
    w.flush()
}

/// Reads a stream written by [`write_stream_dump`].
pub fn read_stream_dump(path: impl AsRef<Path>) -> Result<Vec<StreamElement>> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [t, u, i, a] = fields[..] else {
            return Err(parse_err(format!("expected `t u i a`, got {trimmed:?}")));
        };
        let num = |s: &str| s.parse::<u64>().map_err(|e| parse_err(format!("{s:?}: {e}")));
        let action = match a {
            "+" => Action::Insert,
            "-" => Action::Delete,
            other => return Err(parse_err(format!("bad action {other:?}"))),
        };
        out.push(StreamElement {
            t: num(t)?,
            user: num(u)?,
            item: num(i)?,
            action,
        });
    }
    Ok(out)
}

/// The `top_n` users by current set size (ties by id), paired whenever they
/// share at least one item. Pairs are ordered by rank.
pub fn select_pairs(state: &ExactState, top_n: usize) -> Result<Vec<(UserId, UserId)>> {
    let mut ranked: Vec<(UserId, usize)> = state.users().map(|u| (u, state.size(u))).collect();
    if ranked.len() < 2 {
        return Err(Error::TooFewUsers(ranked.len()));
    }
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    let mut pairs = Vec::new();
    for (a, &(u, _)) in ranked.iter().enumerate() {
        for &(v, _) in &ranked[a + 1..] {
            if state.common(u, v)? > 0 {
                pairs.push((u, v));
            }
        }
    }
    Ok(pairs)
}
