//! Per-node group sets: which few groups should compose a node's embedding.
//!
//! For each node we run a handful of short random walks, map every visited
//! node to its partition group, and keep the `n` most frequently visited
//! groups (the node's own group is always kept and ranked first). Nodes
//! whose walks reach fewer than `n` groups are padded with the smallest
//! unobserved group ids; padding slots are marked so the model can
//! initialize their kernel weights to zero, making them inert.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::partition::Partition;
use crate::seeds;

/// Walk-and-rank settings.
#[derive(Clone, Copy, Debug)]
pub struct WalkConfig {
    /// Walks started from every node.
    pub walks_per_vertex: usize,
    /// Steps taken after the root on each walk.
    pub walk_length: usize,
    /// Group-set size `n`.
    pub set_size: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { walks_per_vertex: 100, walk_length: 5, set_size: 5, seed: 0 }
    }
}

/// The node → ordered-group-set table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSetTable {
    set_size: usize,
    group_count: usize,
    sets: Vec<u32>,
    /// Per node: how many leading entries were actually observed (own group
    /// plus frequency-ranked groups); the rest are padding.
    observed: Vec<u16>,
}

impl GroupSetTable {
    /// Build a table from explicit per-node rows (no padding marks; every
    /// entry counts as observed). Rows must share one length and hold
    /// distinct, in-range group ids.
    pub fn from_rows(rows: &[Vec<u32>], group_count: usize) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptyInput);
        };
        let set_size = first.len();
        if set_size == 0 {
            return Err(Error::InvalidInput("group sets must not be empty".into()));
        }
        let mut sets = Vec::with_capacity(rows.len() * set_size);
        for (v, row) in rows.iter().enumerate() {
            if row.len() != set_size {
                return Err(Error::InvalidInput(format!(
                    "node {v}: expected {set_size} group ids, found {}",
                    row.len()
                )));
            }
            for (i, &g) in row.iter().enumerate() {
                if g as usize >= group_count {
                    return Err(Error::InvalidInput(format!("node {v}: group id {g} out of range")));
                }
                if row[..i].contains(&g) {
                    return Err(Error::InvalidInput(format!("node {v}: duplicate group id {g}")));
                }
            }
            sets.extend_from_slice(row);
        }
        Ok(GroupSetTable { set_size, group_count, sets, observed: vec![set_size as u16; rows.len()] })
    }

    pub fn node_count(&self) -> usize {
        self.observed.len()
    }

    pub fn set_size(&self) -> usize {
        self.set_size
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    /// The ordered group ids of node `v` (own group first, then by
    /// descending walk frequency, then padding).
    pub fn set(&self, v: NodeId) -> &[u32] {
        let v = v as usize;
        &self.sets[v * self.set_size..(v + 1) * self.set_size]
    }

    /// Leading entries of `set(v)` that are not padding.
    pub fn observed_count(&self, v: NodeId) -> usize {
        self.observed[v as usize] as usize
    }

    /// Write `set_size` whitespace-separated group ids per line.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        for v in 0..self.node_count() {
            let set = self.set(v as NodeId);
            let line: Vec<String> = set.iter().map(|g| g.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Read a group-set file. The text format does not record which entries
    /// were padding, so every entry is treated as observed.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        let reader = BufReader::new(source);
        let mut sets: Vec<u32> = Vec::new();
        let mut set_size = 0usize;
        let mut rows = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let ids: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad group id {t:?}") }))
                .collect::<Result<_>>()?;
            if ids.is_empty() {
                return Err(Error::Parse { line: lineno, msg: "empty group set".into() });
            }
            if rows == 0 {
                set_size = ids.len();
            } else if ids.len() != set_size {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {set_size} group ids, found {}", ids.len()),
                });
            }
            sets.extend_from_slice(&ids);
            rows += 1;
        }
        if rows == 0 {
            return Err(Error::EmptyInput);
        }
        let group_count = sets.iter().copied().max().unwrap() as usize + 1;
        Ok(GroupSetTable { set_size, group_count, sets, observed: vec![set_size as u16; rows] })
    }
}

/// The RNG stream feeding all walks rooted at `v`; exposed so tests can
/// replay the exact walks a table was built from.
pub fn walk_rng(seed: u64, v: NodeId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seeds::mix(seed, seeds::SALT_WALK + v as u64))
}

/// One weight-proportional step out of `v`; `None` at a dead end.
pub(crate) fn weighted_step<R: Rng>(g: &Graph, v: NodeId, rng: &mut R) -> Option<NodeId> {
    let (nbrs, ws) = g.neighbor_slice(v);
    match nbrs.len() {
        0 => None,
        1 => Some(nbrs[0]),
        _ if g.has_unit_weights() => Some(nbrs[rng.gen_range(0..nbrs.len())]),
        _ => {
            let total: f64 = ws.iter().sum();
            let mut target = rng.gen::<f64>() * total;
            for (&t, &w) in nbrs.iter().zip(ws) {
                target -= w;
                if target <= 0.0 {
                    return Some(t);
                }
            }
            Some(*nbrs.last().unwrap())
        }
    }
}

/// Weight-proportional random walk of up to `length` steps rooted at
/// `start`. The returned sequence begins at the first step *after* the
/// root; a dead end cuts the walk short.
pub fn random_walk<R: Rng>(g: &Graph, start: NodeId, length: usize, rng: &mut R) -> Result<Vec<NodeId>> {
    if start as usize >= g.node_count() {
        return Err(Error::NodeOutOfRange { node: start as u64, node_count: g.node_count() });
    }
    let mut walk = Vec::with_capacity(length);
    let mut cur = start;
    for _ in 0..length {
        match weighted_step(g, cur, rng) {
            Some(next) => {
                walk.push(next);
                cur = next;
            }
            None => break,
        }
    }
    Ok(walk)
}

/// Top-`n` keys by count, descending count, ties by ascending group id.
pub fn select_by_frequency(counts: &HashMap<u32, u64>, n: usize) -> Vec<u32> {
    let mut ranked: Vec<(u32, u64)> = counts.iter().map(|(&g, &c)| (g, c)).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked.into_iter().map(|(g, _)| g).collect()
}

/// Build the group-set table: `walks_per_vertex` walks of `walk_length`
/// steps from every node, visits mapped to groups and counted (revisits
/// included), own group forced first, remaining slots by frequency, then
/// padding. Nodes are processed independently with per-node RNG streams, so
/// the result is identical for any worker count.
pub fn build_group_sets(g: &Graph, p: &Partition, cfg: &WalkConfig) -> Result<GroupSetTable> {
    if p.node_count() != g.node_count() {
        return Err(Error::InvalidInput(format!(
            "partition covers {} nodes, graph has {}",
            p.node_count(),
            g.node_count()
        )));
    }
    if cfg.walks_per_vertex == 0 || cfg.walk_length == 0 || cfg.set_size == 0 {
        return Err(Error::InvalidConfig("walks_per_vertex, walk_length and set_size must be positive".into()));
    }
    if cfg.set_size > p.group_count() {
        return Err(Error::InvalidConfig(format!(
            "set_size {} exceeds group_count {}",
            cfg.set_size,
            p.group_count()
        )));
    }
    let n = cfg.set_size;
    let node_count = g.node_count();
    let rows: Vec<(Vec<u32>, u16)> = (0..node_count as NodeId)
        .into_par_iter()
        .map(|v| {
            let mut rng = walk_rng(cfg.seed, v);
            let mut counts: HashMap<u32, u64> = HashMap::new();
            for _ in 0..cfg.walks_per_vertex {
                let walk = random_walk(g, v, cfg.walk_length, &mut rng).expect("validated id");
                for node in walk {
                    *counts.entry(p.group(node)).or_insert(0) += 1;
                }
            }
            let own = p.group(v);
            counts.remove(&own);
            let mut set = Vec::with_capacity(n);
            set.push(own);
            set.extend(select_by_frequency(&counts, n - 1));
            let observed = set.len() as u16;
            let mut pad = 0u32;
            while set.len() < n {
                while set.contains(&pad) {
                    pad += 1;
                }
                set.push(pad);
                pad += 1;
            }
            (set, observed)
        })
        .collect();

    let mut sets = Vec::with_capacity(node_count * n);
    let mut observed = Vec::with_capacity(node_count);
    for (set, obs) in rows {
        sets.extend_from_slice(&set);
        observed.push(obs);
    }
    Ok(GroupSetTable { set_size: n, group_count: p.group_count(), sets, observed })
}
