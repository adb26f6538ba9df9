//! Size-constrained label propagation: split a graph into `k` groups of
//! roughly equal size while keeping the edge cut small.
//!
//! Nodes start in balanced groups (round-robin over a seeded shuffle) and
//! then repeatedly adopt the group holding the largest share of their
//! incident edge weight, subject to a hard size cap. Moves are applied
//! sequentially in ascending node order, so the edge cut never increases
//! from one round to the next. Partitions produced by external tools can be
//! imported from the conventional one-group-id-per-line file format.

use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::seeds;

/// A total node → group assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    group_of: Vec<u32>,
    group_count: usize,
}

impl Partition {
    /// Wrap an explicit assignment; every id must lie in `[0, group_count)`.
    pub fn from_assignment(group_of: Vec<u32>, group_count: usize) -> Result<Self> {
        if group_count == 0 {
            return Err(Error::InvalidConfig("group_count must be positive".into()));
        }
        if let Some(&g) = group_of.iter().find(|&&g| g as usize >= group_count) {
            return Err(Error::InvalidInput(format!("group id {g} out of range (group_count = {group_count})")));
        }
        Ok(Partition { group_of, group_count })
    }

    pub fn group(&self, v: NodeId) -> u32 {
        self.group_of[v as usize]
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn node_count(&self) -> usize {
        self.group_of.len()
    }

    pub fn assignment(&self) -> &[u32] {
        &self.group_of
    }

    /// Number of nodes in each group.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.group_count];
        for &g in &self.group_of {
            sizes[g as usize] += 1;
        }
        sizes
    }

    /// Write one group id per line, line index = node id.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        for &g in &self.group_of {
            writeln!(out, "{g}")?;
        }
        Ok(())
    }

    /// Read a partition file (one group id per line).
    ///
    /// The line count must match `node_count`. Unused group ids are
    /// compacted away (with a warning) so downstream tables stay dense.
    pub fn load<R: Read>(source: R, node_count: usize) -> Result<Self> {
        let reader = BufReader::new(source);
        let mut group_of = Vec::with_capacity(node_count);
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if group_of.len() == node_count {
                return Err(Error::InvalidInput(format!("partition file has more than {node_count} lines")));
            }
            let g: u32 = line
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: lineno, msg: format!("bad group id {:?}", line.trim()) })?;
            group_of.push(g);
        }
        if group_of.len() != node_count {
            return Err(Error::InvalidInput(format!(
                "partition file has {} lines, expected {node_count}",
                group_of.len()
            )));
        }
        let raw_count = group_of.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut used = vec![false; raw_count];
        for &g in &group_of {
            used[g as usize] = true;
        }
        let used_count = used.iter().filter(|&&u| u).count();
        if used_count != raw_count {
            eprintln!("warning: partition uses {used_count} of {raw_count} group ids; compacting to dense ids");
            let mut remap = vec![0u32; raw_count];
            let mut next = 0u32;
            for (g, &u) in used.iter().enumerate() {
                if u {
                    remap[g] = next;
                    next += 1;
                }
            }
            for g in &mut group_of {
                *g = remap[*g as usize];
            }
        }
        Partition::from_assignment(group_of, used_count)
    }
}

/// Ideal group size: `ceil(node_count / k)`.
fn ideal_size(node_count: usize, k: usize) -> usize {
    node_count.div_ceil(k)
}

/// Hard per-group size cap for imbalance `epsilon`.
///
/// Computed as `ceil((1 + epsilon) * node_count / k)` (never below the ideal
/// size, so a balanced start is always admissible); the small subtraction
/// guards against values like `1.1 * 20 / 2` landing a hair above the exact
/// integer and inflating the cap.
pub fn size_cap(node_count: usize, k: usize, epsilon: f64) -> usize {
    let exact = (1.0 + epsilon) * node_count as f64 / k as f64;
    let cap = (exact - 1e-9).ceil() as usize;
    cap.max(ideal_size(node_count, k))
}

/// One label-propagation run with observable per-round state, so callers
/// (and tests) can watch the cut and the balance bound round by round.
pub struct LabelPropagation<'g> {
    graph: &'g Graph,
    k: usize,
    cap: usize,
    assignment: Vec<u32>,
    sizes: Vec<usize>,
    // scratch: per-group incident weight, plus the list of touched groups
    score: Vec<f64>,
    touched: Vec<u32>,
}

impl<'g> LabelPropagation<'g> {
    /// Balanced seeded start: shuffle the node ids, then hand out groups
    /// round-robin over the shuffled order.
    pub fn new(graph: &'g Graph, k: usize, epsilon: f64, seed: u64) -> Result<Self> {
        let n = graph.node_count();
        validate_params(n, k, epsilon)?;
        let mut perm: Vec<NodeId> = (0..n as NodeId).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        perm.shuffle(&mut rng);
        let mut assignment = vec![0u32; n];
        for (i, &node) in perm.iter().enumerate() {
            assignment[node as usize] = (i * k / n) as u32;
        }
        Self::from_assignment(graph, k, epsilon, assignment)
    }

    /// Start from an explicit assignment (already within the size cap).
    pub fn from_assignment(graph: &'g Graph, k: usize, epsilon: f64, assignment: Vec<u32>) -> Result<Self> {
        let n = graph.node_count();
        validate_params(n, k, epsilon)?;
        if assignment.len() != n {
            return Err(Error::InvalidInput(format!(
                "assignment covers {} nodes, graph has {n}",
                assignment.len()
            )));
        }
        let cap = size_cap(n, k, epsilon);
        let mut sizes = vec![0usize; k];
        for &g in &assignment {
            if g as usize >= k {
                return Err(Error::InvalidInput(format!("group id {g} out of range (k = {k})")));
            }
            sizes[g as usize] += 1;
        }
        if let Some(worst) = sizes.iter().copied().max() {
            if worst > cap {
                return Err(Error::InvalidInput(format!("initial group size {worst} exceeds cap {cap}")));
            }
        }
        Ok(LabelPropagation { graph, k, cap, assignment, sizes, score: vec![0.0; k], touched: Vec::new() })
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// One pass over all nodes in ascending id order; returns the number of
    /// accepted moves. Each node adopts the group with the greatest incident
    /// edge weight among its neighbors (ties to the smallest group id),
    /// unless the move would overflow the cap or empty its current group.
    pub fn round(&mut self) -> usize {
        let mut moves = 0usize;
        for v in 0..self.graph.node_count() as NodeId {
            let (nbrs, ws) = self.graph.neighbor_slice(v);
            if nbrs.is_empty() {
                continue;
            }
            self.touched.clear();
            for (&t, &w) in nbrs.iter().zip(ws) {
                let g = self.assignment[t as usize];
                if self.score[g as usize] == 0.0 {
                    self.touched.push(g);
                }
                self.score[g as usize] += w;
            }
            let mut best = self.touched[0];
            for &g in &self.touched[1..] {
                let (sg, sb) = (self.score[g as usize], self.score[best as usize]);
                if sg > sb || (sg == sb && g < best) {
                    best = g;
                }
            }
            for &g in &self.touched {
                self.score[g as usize] = 0.0;
            }
            let current = self.assignment[v as usize];
            if best != current
                && self.sizes[best as usize] < self.cap
                && self.sizes[current as usize] > 1
            {
                self.assignment[v as usize] = best;
                self.sizes[current as usize] -= 1;
                self.sizes[best as usize] += 1;
                moves += 1;
            }
        }
        moves
    }

    /// Run until a round makes no moves or `max_rounds` is reached; returns
    /// the number of rounds executed.
    pub fn run(&mut self, max_rounds: usize) -> usize {
        for r in 0..max_rounds {
            if self.round() == 0 {
                return r + 1;
            }
        }
        max_rounds
    }

    pub fn into_partition(self) -> Partition {
        Partition { group_of: self.assignment, group_count: self.k }
    }
}

fn validate_params(node_count: usize, k: usize, epsilon: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    if k > node_count {
        return Err(Error::InvalidConfig(format!("k = {k} exceeds node_count = {node_count}")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be >= 0, found {epsilon}")));
    }
    Ok(())
}

/// Partition `g` into `k` groups via size-constrained label propagation.
///
/// `seed` is the run-level seed; this entry point derives its own stream
/// from it, so the same seed can feed every stage of a run.
pub fn partition_label_propagation(g: &Graph, k: usize, epsilon: f64, max_rounds: usize, seed: u64) -> Result<Partition> {
    if max_rounds == 0 {
        return Err(Error::InvalidConfig("max_rounds must be positive".into()));
    }
    let mut lp = LabelPropagation::new(g, k, epsilon, seeds::mix(seed, seeds::SALT_PARTITION))?;
    lp.run(max_rounds);
    Ok(lp.into_partition())
}

/// Quality metrics: total weight of edges crossing groups (each undirected
/// edge counted once) and max group size relative to the ideal size.
pub fn partition_quality(g: &Graph, p: &Partition) -> Result<(f64, f64)> {
    if p.node_count() != g.node_count() {
        return Err(Error::InvalidInput(format!(
            "partition covers {} nodes, graph has {}",
            p.node_count(),
            g.node_count()
        )));
    }
    let mut cut = 0.0;
    for (u, v, w) in g.edge_list() {
        if p.group(u) != p.group(v) {
            cut += w;
        }
    }
    let max_size = p.sizes().into_iter().max().unwrap_or(0);
    let imbalance = max_size as f64 / ideal_size(g.node_count(), p.group_count()) as f64;
    Ok((cut, imbalance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Two disjoint cliques of `size` nodes each: 0..size and size..2*size.
    fn two_cliques(size: usize) -> Graph {
        let mut edges = Vec::new();
        for base in [0, size] {
            for i in base..base + size {
                for j in (i + 1)..base + size {
                    edges.push((i as NodeId, j as NodeId, 1.0));
                }
            }
        }
        Graph::from_edges(2 * size, &edges, false).unwrap()
    }

    fn karate() -> Graph {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/karate.edges")).unwrap();
        Graph::load_edge_list(text.as_bytes(), false).unwrap()
    }

    #[test]
    fn cap_formula() {
        assert_eq!(size_cap(34, 4, 0.05), 9);
        assert_eq!(size_cap(8, 2, 0.1), 5);
        assert_eq!(size_cap(20, 2, 0.1), 11); // float noise must not round 11.0 up
        assert_eq!(size_cap(6, 3, 0.0), 2);
        assert_eq!(size_cap(10, 3, 0.0), 4);
    }

    #[test]
    fn two_cliques_recover_clique_split() {
        let g = two_cliques(4);
        for seed in 0..10 {
            let p = partition_label_propagation(&g, 2, 0.1, 100, seed).unwrap();
            let (cut, _) = partition_quality(&g, &p).unwrap();
            assert_eq!(cut, 0.0, "seed {seed} left a nonzero cut");
            for i in 1..4 {
                assert_eq!(p.group(0), p.group(i));
                assert_eq!(p.group(4), p.group(4 + i as NodeId));
            }
            assert_ne!(p.group(0), p.group(4));
        }
    }

    #[test]
    fn two_cliques_from_every_balanced_start() {
        // Every way of seeding two groups of four over eight nodes must end
        // at the clique split (cut 0) under sequential majority moves.
        let g = two_cliques(4);
        let nodes: Vec<u32> = (0..8).collect();
        let mut starts = 0;
        for mask in 0u32..(1 << 8) {
            if mask.count_ones() != 4 {
                continue;
            }
            starts += 1;
            let assignment: Vec<u32> = nodes.iter().map(|&v| ((mask >> v) & 1) as u32).collect();
            let mut lp = LabelPropagation::from_assignment(&g, 2, 0.1, assignment).unwrap();
            lp.run(100);
            let p = lp.into_partition();
            let (cut, _) = partition_quality(&g, &p).unwrap();
            assert_eq!(cut, 0.0, "mask {mask:08b} did not converge to the clique split");
        }
        assert_eq!(starts, 70);
    }

    #[test]
    fn edgeless_graph_keeps_initialization() {
        let g = Graph::from_edges(6, &[], false).unwrap();
        let p = partition_label_propagation(&g, 3, 0.1, 10, 7).unwrap();
        let mut sizes = p.sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2]);
    }

    #[test]
    fn karate_balance_bound() {
        let g = karate();
        for seed in [1, 2, 3] {
            let p = partition_label_propagation(&g, 4, 0.05, 25, seed).unwrap();
            let sizes = p.sizes();
            assert_eq!(sizes.iter().sum::<usize>(), 34);
            assert!(*sizes.iter().max().unwrap() <= 9, "cap violated: {sizes:?}");
            assert!(sizes.iter().all(|&s| s >= 1), "empty group: {sizes:?}");
            let (cut, imbalance) = partition_quality(&g, &p).unwrap();
            assert!(cut >= 0.0);
            assert!(imbalance <= 1.0 + 1e-12, "imbalance {imbalance} above cap/ideal");
        }
    }

    #[test]
    fn cut_is_monotone_and_balance_holds_each_round() {
        // Random G(n, p) graphs; the cut after each round must never rise
        // and every round must respect the size cap.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..5 {
            let n = 40 + trial * 17;
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen::<f64>() < 0.08 {
                        edges.push((u as NodeId, v as NodeId, 1.0 + rng.gen::<f64>()));
                    }
                }
            }
            let g = Graph::from_edges(n, &edges, false).unwrap();
            let k = 4;
            let mut lp = LabelPropagation::new(&g, k, 0.1, trial as u64).unwrap();
            let cap = lp.cap();
            let quality = |a: &[u32]| {
                let p = Partition::from_assignment(a.to_vec(), k).unwrap();
                partition_quality(&g, &p).unwrap().0
            };
            let mut prev_cut = quality(lp.assignment());
            for _ in 0..30 {
                let moves = lp.round();
                assert!(lp.sizes().iter().all(|&s| s <= cap), "cap violated mid-run");
                assert!(lp.sizes().iter().all(|&s| s >= 1), "group emptied mid-run");
                let cut = quality(lp.assignment());
                assert!(cut <= prev_cut + 1e-9, "cut rose from {prev_cut} to {cut}");
                prev_cut = cut;
                if moves == 0 {
                    break;
                }
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = karate();
        let a = partition_label_propagation(&g, 4, 0.05, 25, 11).unwrap();
        let b = partition_label_propagation(&g, 4, 0.05, 25, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parameter_validation() {
        let g = two_cliques(4);
        assert!(partition_label_propagation(&g, 0, 0.1, 10, 0).is_err());
        assert!(partition_label_propagation(&g, 9, 0.1, 10, 0).is_err());
        assert!(partition_label_propagation(&g, 2, -0.5, 10, 0).is_err());
        assert!(partition_label_propagation(&g, 2, 0.1, 0, 0).is_err());
    }

    #[test]
    fn quality_on_known_splits() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)], false).unwrap();
        let p = Partition::from_assignment(vec![0, 1], 2).unwrap();
        let (cut, imbalance) = partition_quality(&g, &p).unwrap();
        assert_eq!(cut, 1.0);
        assert_eq!(imbalance, 1.0);

        let g = two_cliques(4);
        let p = Partition::from_assignment(vec![0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        let (cut, imbalance) = partition_quality(&g, &p).unwrap();
        assert_eq!(cut, 0.0);
        assert_eq!(imbalance, 1.0);
    }

    #[test]
    fn partition_file_round_trip() {
        let p = Partition::from_assignment(vec![0, 0, 1, 2, 1], 3).unwrap();
        let mut buf = Vec::new();
        p.save(&mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf), "0\n0\n1\n2\n1\n");
        let q = Partition::load(buf.as_slice(), 5).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn partition_load_compacts_unused_groups() {
        let p = Partition::load("2\n2\n2\n".as_bytes(), 3).unwrap();
        assert_eq!(p.group_count(), 1);
        assert_eq!(p.assignment(), &[0, 0, 0]);

        let p = Partition::load("0\n0\n1\n".as_bytes(), 3).unwrap();
        assert_eq!(p.group_count(), 2);
        assert_eq!(p.assignment(), &[0, 0, 1]);
    }

    #[test]
    fn partition_load_errors() {
        assert!(Partition::load("0\n1\n".as_bytes(), 3).is_err());
        assert!(Partition::load("0\n1\n2\n3\n".as_bytes(), 3).is_err());
        assert!(matches!(
            Partition::load("0\nx\n1\n".as_bytes(), 3),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
