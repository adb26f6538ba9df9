//! Training-pair and negative-sample generation.
//!
//! All three base methods feed identical `(context, center)` pairs into the
//! shared trainer: LINE draws weighted edges directly, DeepWalk windows
//! first-order walks, node2vec windows second-order walks biased by the
//! return parameter `p` and in-out parameter `q`. Negatives are drawn from a
//! degree-power distribution. Weighted draws go through alias tables, so a
//! sample costs O(1) regardless of the weight vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::groupmap;
use crate::seeds;

/// Vose alias table over `weights.len()` outcomes.
#[derive(Clone, Debug)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("alias table needs at least one weight".into()));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidInput("alias weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("alias weights must not all be zero".into()));
        }
        let n = weights.len();
        let mut prob = vec![0.0; n];
        let mut alias = vec![0u32; n];
        // scaled weights; small/large worklists per Vose's method
        let mut scaled: Vec<f64> = weights.iter().map(|&w| w * n as f64 / total).collect();
        let mut small: Vec<u32> = Vec::with_capacity(n);
        let mut large: Vec<u32> = Vec::with_capacity(n);
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }
        while !small.is_empty() && !large.is_empty() {
            let s = small.pop().unwrap();
            let l = *large.last().unwrap();
            prob[s as usize] = scaled[s as usize];
            alias[s as usize] = l;
            scaled[l as usize] -= 1.0 - scaled[s as usize];
            if scaled[l as usize] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers on either list are within rounding of exactly 1
        for i in large.into_iter().chain(small) {
            prob[i as usize] = 1.0;
        }
        Ok(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// Which pair stream drives training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Line2,
    Deepwalk,
    Node2vec,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line2" => Ok(Method::Line2),
            "deepwalk" => Ok(Method::Deepwalk),
            "node2vec" => Ok(Method::Node2vec),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?} (expected line2|deepwalk|node2vec)"))),
        }
    }
}

/// Pair-stream settings shared by all methods.
#[derive(Clone, Copy, Debug)]
pub struct SamplerConfig {
    pub method: Method,
    /// Co-occurrence window for walk-based methods.
    pub window: usize,
    /// Vertices per training walk (root included).
    pub walk_length: usize,
    pub walks_per_vertex: usize,
    /// node2vec return parameter.
    pub p: f64,
    /// node2vec in-out parameter.
    pub q: f64,
    /// Negative samples per positive pair.
    pub negatives: usize,
    /// Negatives drawn with probability proportional to degree^exponent.
    pub negative_exponent: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            method: Method::Line2,
            window: 5,
            walk_length: 40,
            walks_per_vertex: 5,
            p: 1.0,
            q: 1.0,
            negatives: 5,
            negative_exponent: 0.75,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.walk_length == 0 || self.walks_per_vertex == 0 {
            return Err(Error::InvalidConfig("window, walk_length and walks_per_vertex must be positive".into()));
        }
        if !(self.p > 0.0) || !(self.q > 0.0) {
            return Err(Error::InvalidConfig(format!("p and q must be positive, found p={} q={}", self.p, self.q)));
        }
        if self.negatives == 0 {
            return Err(Error::InvalidConfig("negatives must be positive".into()));
        }
        if self.negative_exponent < 0.0 {
            return Err(Error::InvalidConfig("negative_exponent must be >= 0".into()));
        }
        Ok(())
    }
}

/// Edge sampler: each draw picks a stored adjacency entry with probability
/// proportional to its weight and emits it as `(source, target)` =
/// `(context, center)`. One epoch is `epoch_len()` draws — every stored
/// entry trained once in expectation.
pub struct LinePairSampler {
    alias: AliasTable,
    src: Vec<NodeId>,
    dst: Vec<NodeId>,
}

impl LinePairSampler {
    pub fn new(g: &Graph) -> Result<Self> {
        if g.entry_count() == 0 {
            return Err(Error::EmptyInput);
        }
        let mut src = Vec::with_capacity(g.entry_count());
        let mut dst = Vec::with_capacity(g.entry_count());
        let mut weights = Vec::with_capacity(g.entry_count());
        for u in 0..g.node_count() as NodeId {
            let (nbrs, ws) = g.neighbor_slice(u);
            for (&v, &w) in nbrs.iter().zip(ws) {
                src.push(u);
                dst.push(v);
                weights.push(w);
            }
        }
        Ok(LinePairSampler { alias: AliasTable::new(&weights)?, src, dst })
    }

    pub fn epoch_len(&self) -> usize {
        self.src.len()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (NodeId, NodeId) {
        let e = self.alias.sample(rng);
        (self.src[e], self.dst[e])
    }
}

/// Degree-power negative sampler over all nodes.
pub struct NegativeSampler {
    alias: AliasTable,
}

impl NegativeSampler {
    pub fn new(g: &Graph, exponent: f64) -> Result<Self> {
        let weights: Vec<f64> = (0..g.node_count() as NodeId).map(|v| g.weighted_degree(v).powf(exponent)).collect();
        Ok(NegativeSampler { alias: AliasTable::new(&weights)? })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> NodeId {
        self.alias.sample(rng) as NodeId
    }
}

/// A materialized training-walk corpus. Walks are generated per
/// `(pass, node)` cell with independent seeded streams, so the corpus is
/// identical for any worker count, and fractional epochs can replay a
/// stable prefix.
pub struct WalkCorpus {
    pub walks: Vec<Vec<NodeId>>,
    pub window: usize,
}

impl WalkCorpus {
    /// Windowed pair count of one walk of `len` vertices.
    fn pairs_in_walk(len: usize, window: usize) -> u64 {
        let mut total = 0u64;
        for j in 0..len {
            total += (j.min(window) + (len - 1 - j).min(window)) as u64;
        }
        total
    }

    /// Pairs in one full traversal of the corpus.
    pub fn pairs_per_epoch(&self) -> u64 {
        self.walks.iter().map(|w| Self::pairs_in_walk(w.len(), self.window)).sum()
    }

    /// Pairs in the first `walk_count` walks.
    pub fn pairs_in_prefix(&self, walk_count: usize) -> u64 {
        self.walks[..walk_count.min(self.walks.len())]
            .iter()
            .map(|w| Self::pairs_in_walk(w.len(), self.window))
            .sum()
    }
}

/// All `(context, center)` pairs of `walk` within `window`.
pub fn window_pairs(walk: &[NodeId], window: usize) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
    walk.iter().enumerate().flat_map(move |(j, &center)| {
        let lo = j.saturating_sub(window);
        let hi = (j + window).min(walk.len() - 1);
        (lo..=hi).filter(move |&k| k != j).map(move |k| (walk[k], center))
    })
}

/// Generate the training-walk corpus for `cfg.method` (first-order for
/// DeepWalk, second-order for node2vec). Walks are `walk_length` vertices
/// starting at the root, `walks_per_vertex` passes over all nodes in
/// ascending id order; dead ends cut walks short.
pub fn build_training_walks(g: &Graph, cfg: &SamplerConfig, seed: u64) -> Result<WalkCorpus> {
    cfg.validate()?;
    let n = g.node_count();
    let mut walks = Vec::with_capacity(n * cfg.walks_per_vertex);
    for pass in 0..cfg.walks_per_vertex {
        for v in 0..n as NodeId {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(
                seed,
                seeds::SALT_TRAIN_WALK + (pass * n) as u64 + v as u64,
            ));
            let walk = match cfg.method {
                Method::Node2vec => node2vec_walk(g, v, cfg.walk_length, cfg.p, cfg.q, &mut rng),
                _ => {
                    let mut walk = vec![v];
                    walk.extend(groupmap::random_walk(g, v, cfg.walk_length - 1, &mut rng)?);
                    walk
                }
            };
            walks.push(walk);
        }
    }
    Ok(WalkCorpus { walks, window: cfg.window })
}

/// Second-order biased walk of `length` vertices rooted at `start`.
///
/// From `(prev, cur)` a neighbor `x` of `cur` keeps its edge weight scaled
/// by `1/p` when `x == prev`, by `1` when `x` is also a neighbor of `prev`,
/// and by `1/q` otherwise. The first step is plain weight-proportional.
pub fn node2vec_walk<R: Rng>(g: &Graph, start: NodeId, length: usize, p: f64, q: f64, rng: &mut R) -> Vec<NodeId> {
    let mut walk = Vec::with_capacity(length);
    walk.push(start);
    if length == 1 {
        return walk;
    }
    let Some(first) = groupmap::weighted_step(g, start, rng) else {
        return walk;
    };
    walk.push(first);
    let mut prev = start;
    let mut cur = first;
    let mut scaled: Vec<f64> = Vec::new();
    while walk.len() < length {
        let (nbrs, ws) = g.neighbor_slice(cur);
        if nbrs.is_empty() {
            break;
        }
        scaled.clear();
        scaled.reserve(nbrs.len());
        let mut total = 0.0;
        for (&x, &w) in nbrs.iter().zip(ws) {
            let factor = if x == prev {
                1.0 / p
            } else if g.has_edge(prev, x) {
                1.0
            } else {
                1.0 / q
            };
            let sw = w * factor;
            total += sw;
            scaled.push(sw);
        }
        let mut target = rng.gen::<f64>() * total;
        let mut chosen = nbrs.len() - 1;
        for (i, &sw) in scaled.iter().enumerate() {
            target -= sw;
            if target <= 0.0 {
                chosen = i;
                break;
            }
        }
        let next = nbrs[chosen];
        walk.push(next);
        prev = cur;
        cur = next;
    }
    walk
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn alias_rejects_degenerate_weights() {
        assert!(AliasTable::new(&[]).is_err());
        assert!(AliasTable::new(&[0.0, 0.0]).is_err());
        assert!(AliasTable::new(&[1.0, -1.0]).is_err());
        assert!(AliasTable::new(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn alias_matches_target_distribution() {
        // each count must sit within 3 sigma of its binomial expectation
        let cases: Vec<Vec<f64>> = vec![
            vec![1.0],
            vec![1.0, 0.0, 3.0],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.25; 4],
            vec![10.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        ];
        let draws = 100_000usize;
        for (case, weights) in cases.iter().enumerate() {
            let table = AliasTable::new(weights).unwrap();
            let total: f64 = weights.iter().sum();
            let mut counts = vec![0u64; weights.len()];
            let mut r = rng(1000 + case as u64);
            for _ in 0..draws {
                counts[table.sample(&mut r)] += 1;
            }
            for (i, (&c, &w)) in counts.iter().zip(weights).enumerate() {
                let p = w / total;
                let mean = draws as f64 * p;
                let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
                assert!(
                    (c as f64 - mean).abs() <= 3.0 * sigma + 1e-9,
                    "case {case} outcome {i}: count {c}, expected {mean:.1} +- {sigma:.1}"
                );
            }
        }
    }

    #[test]
    fn line_sampler_single_edge() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)], true).unwrap();
        let s = LinePairSampler::new(&g).unwrap();
        let mut r = rng(0);
        for _ in 0..10 {
            assert_eq!(s.sample(&mut r), (0, 1));
        }
    }

    #[test]
    fn line_sampler_follows_edge_weights() {
        let g = Graph::from_edges(4, &[(0, 1, 3.0), (2, 3, 1.0)], true).unwrap();
        let s = LinePairSampler::new(&g).unwrap();
        let mut r = rng(5);
        let mut heavy = 0u32;
        for _ in 0..10_000 {
            if s.sample(&mut r) == (0, 1) {
                heavy += 1;
            }
        }
        let freq = heavy as f64 / 10_000.0;
        assert!((freq - 0.75).abs() < 0.02, "frequency {freq}");
    }

    #[test]
    fn line_epoch_counts_stored_entries() {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/karate.edges")).unwrap();
        let g = Graph::load_edge_list(text.as_bytes(), false).unwrap();
        let s = LinePairSampler::new(&g).unwrap();
        assert_eq!(s.epoch_len(), 156);
        let empty = Graph::from_edges(3, &[], false).unwrap();
        assert!(LinePairSampler::new(&empty).is_err());
    }

    #[test]
    fn window_pairs_enumeration() {
        let pairs: Vec<_> = window_pairs(&[0, 1, 2], 1).collect();
        assert_eq!(pairs.len(), 4);
        for want in [(1, 0), (0, 1), (2, 1), (1, 2)] {
            assert!(pairs.contains(&want), "missing {want:?}");
        }
        assert_eq!(window_pairs(&[7], 3).count(), 0);
        assert_eq!(window_pairs(&[0, 1, 2, 3, 4], 2).count(), 14);
        assert_eq!(WalkCorpus::pairs_in_walk(5, 2), 14);
    }

    #[test]
    fn window_pairs_are_symmetric() {
        let walk = [3, 1, 4, 1, 5, 9, 2, 6];
        let pairs: Vec<_> = window_pairs(&walk, 3).collect();
        for &(u, v) in &pairs {
            let mirrored = pairs.iter().filter(|&&(a, b)| (a, b) == (v, u)).count();
            let forward = pairs.iter().filter(|&&(a, b)| (a, b) == (u, v)).count();
            assert_eq!(mirrored, forward, "asymmetric multiset at ({u}, {v})");
        }
    }

    #[test]
    fn deepwalk_corpus_shape_and_determinism() {
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)], false).unwrap();
        let cfg = SamplerConfig { method: Method::Deepwalk, walk_length: 6, walks_per_vertex: 3, window: 2, ..Default::default() };
        let a = build_training_walks(&g, &cfg, 7).unwrap();
        let b = build_training_walks(&g, &cfg, 7).unwrap();
        assert_eq!(a.walks, b.walks);
        assert_eq!(a.walks.len(), 12);
        for (i, walk) in a.walks.iter().enumerate() {
            assert_eq!(walk.len(), 6);
            assert_eq!(walk[0], (i % 4) as NodeId, "walk {i} must be rooted at its node");
        }
        assert_eq!(a.pairs_per_epoch(), 12 * WalkCorpus::pairs_in_walk(6, 2));
        assert_eq!(a.pairs_in_prefix(3), 3 * WalkCorpus::pairs_in_walk(6, 2));
        let c = build_training_walks(&g, &cfg, 8).unwrap();
        assert_ne!(a.walks, c.walks, "different seed should move the walks");
    }

    #[test]
    fn node2vec_matches_first_order_when_p_q_are_one() {
        // triangle + pendant: with p=q=1 every bias factor collapses to 1,
        // so the step out of (prev=3, cur=1) is uniform over {0, 2, 3}
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (1, 3, 1.0)], false).unwrap();
        let mut r1 = rng(11);
        let walk = node2vec_walk(&g, 0, 20, 1.0, 1.0, &mut r1);
        assert_eq!(walk.len(), 20);
        assert_eq!(walk[0], 0);
        for w in walk.windows(2) {
            assert!(g.has_edge(w[0], w[1]), "non-edge step {w:?}");
        }
        let mut counts = [0u64; 4];
        for _ in 0..30_000 {
            let walk = node2vec_walk(&g, 3, 3, 1.0, 1.0, &mut r1);
            counts[walk[2] as usize] += 1;
        }
        for x in [0usize, 2, 3] {
            let freq = counts[x] as f64 / 30_000.0;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "node {x}: frequency {freq}");
        }
    }

    #[test]
    fn node2vec_transition_weights_at_a_junction() {
        // triangle 0-1-2 plus pendant 1-3, standing at cur=1 with prev=0:
        // unnormalized weights are {0: 1/p, 2: 1 (0-2 closes the triangle),
        // 3: 1/q}. With p=4, q=1/4 the step distribution is
        // {0: 0.25, 2: 1, 3: 4} / 5.25. The first hop from 0 is uniform over
        // {1, 2}, so condition on the walks that actually went 0 -> 1.
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (1, 3, 1.0)], false).unwrap();
        let (p, q) = (4.0, 0.25);
        let mut counts = [0u64; 4];
        let mut kept = 0u64;
        let mut r = rng(21);
        for _ in 0..80_000 {
            let walk = node2vec_walk(&g, 0, 3, p, q, &mut r);
            if walk[1] != 1 {
                continue;
            }
            counts[walk[2] as usize] += 1;
            kept += 1;
        }
        assert!(kept > 30_000, "conditioning kept only {kept} walks");
        let total = 0.25 + 1.0 + 4.0;
        for (x, want) in [(0usize, 0.25 / total), (2, 1.0 / total), (3, 4.0 / total)] {
            let freq = counts[x] as f64 / kept as f64;
            assert!((freq - want).abs() < 0.02, "node {x}: frequency {freq}, want {want}");
        }
    }

    #[test]
    fn node2vec_limits() {
        // huge p, q=1: returning is suppressed, so on a path the walk always
        // advances toward the far end
        let edges: Vec<(NodeId, NodeId, f64)> = (0..9).map(|i| (i, i + 1, 1.0)).collect();
        let path = Graph::from_edges(10, &edges, false).unwrap();
        let mut r = rng(31);
        for _ in 0..50 {
            let walk = node2vec_walk(&path, 0, 10, 1e12, 1.0, &mut r);
            let want: Vec<NodeId> = (0..10).collect();
            assert_eq!(walk, want, "walk must advance monotonically");
        }
        // huge q, p=1: jumping to a node not adjacent to prev is suppressed,
        // so from the pendant the walk shuttles 3-1-3-1 and never reaches 0/2
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (1, 3, 1.0)], false).unwrap();
        for _ in 0..50 {
            let walk = node2vec_walk(&g, 3, 12, 1.0, 1e12, &mut r);
            assert!(walk.iter().all(|&v| v == 1 || v == 3), "walk left the pendant loop: {walk:?}");
        }
    }

    #[test]
    fn negative_sampler_distributions() {
        // exponent 0: uniform over all nodes, even isolated ones
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0)], false).unwrap();
        let s = NegativeSampler::new(&g, 0.0).unwrap();
        let mut counts = [0u64; 4];
        let mut r = rng(41);
        for _ in 0..10_000 {
            counts[s.sample(&mut r) as usize] += 1;
        }
        for (v, &c) in counts.iter().enumerate() {
            let freq = c as f64 / 10_000.0;
            assert!((freq - 0.25).abs() < 0.02, "node {v}: frequency {freq}");
        }

        // exponent 1 on a 4-leaf star: the center holds half the degree mass
        let star = Graph::from_edges(5, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)], false).unwrap();
        let s = NegativeSampler::new(&star, 1.0).unwrap();
        let mut center = 0u64;
        for _ in 0..10_000 {
            if s.sample(&mut r) == 0 {
                center += 1;
            }
        }
        let freq = center as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "center frequency {freq}");
    }

    #[test]
    fn default_config_matches_conventions() {
        let cfg = SamplerConfig::default();
        assert_eq!(cfg.window, 5);
        assert_eq!(cfg.walk_length, 40);
        assert_eq!(cfg.walks_per_vertex, 5);
        assert_eq!(cfg.negatives, 5);
        assert_eq!(cfg.negative_exponent, 0.75);
        assert!(cfg.validate().is_ok());
        assert!(SamplerConfig { p: 0.0, ..cfg }.validate().is_err());
        assert!(SamplerConfig { window: 0, ..cfg }.validate().is_err());
        assert!("node2vec".parse::<Method>().is_ok());
        assert!("svd".parse::<Method>().is_err());
    }
}
