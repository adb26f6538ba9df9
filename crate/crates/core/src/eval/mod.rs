//! Link-prediction evaluation: edge holdout splits, ranking metrics, and a
//! text-format embedding store.

pub mod classify;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::groupmap::GroupSetTable;
use crate::model::ModelParameters;
use crate::seeds;

/// Dense per-node vectors, as written by the embedding exporter.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    d: usize,
    data: Vec<f64>,
}

impl Embeddings {
    pub fn from_model(params: &ModelParameters, table: &GroupSetTable) -> Embeddings {
        let d = params.d();
        let n = params.node_count();
        let mut data = vec![0.0; n * d];
        for v in 0..n {
            let emb = params.node_embedding(table, v as NodeId);
            data[v * d..(v + 1) * d].copy_from_slice(&emb);
        }
        Embeddings { d, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Embeddings> {
        let d = rows.first().map_or(0, |r| r.len());
        if d == 0 {
            return Err(Error::InvalidInput("embeddings need at least one non-empty row".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::InvalidInput("embedding rows must share one dimension".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Embeddings { d, data })
    }

    pub fn node_count(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vector(&self, v: NodeId) -> &[f64] {
        &self.data[v as usize * self.d..(v as usize + 1) * self.d]
    }

    /// Parse the `"node_count d"` header format produced by the exporter.
    /// Rows may appear in any order but every node must appear exactly once.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Embeddings> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(Error::EmptyInput),
        };
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse { line: 1, msg: format!("bad header token '{t}'") }))
            .collect::<Result<_>>()?;
        let [n, d] = dims[..] else {
            return Err(Error::Parse { line: 1, msg: "header must be 'node_count dimension'".into() });
        };
        if n == 0 || d == 0 {
            return Err(Error::EmptyInput);
        }
        let mut data = vec![0.0f64; n * d];
        let mut seen = vec![false; n];
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let mut tokens = line.split_whitespace();
            let Some(id_tok) = tokens.next() else { continue };
            let id: usize = id_tok
                .parse()
                .map_err(|_| Error::Parse { line: lineno, msg: format!("bad node id '{id_tok}'") })?;
            if id >= n {
                return Err(Error::NodeOutOfRange { node: id as u64, node_count: n });
            }
            if seen[id] {
                return Err(Error::Parse { line: lineno, msg: format!("duplicate row for node {id}") });
            }
            seen[id] = true;
            let mut count = 0;
            for (j, tok) in tokens.enumerate() {
                if j >= d {
                    return Err(Error::Parse { line: lineno, msg: "too many values in row".into() });
                }
                data[id * d + j] = tok
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("bad value '{tok}'") })?;
                count += 1;
            }
            if count != d {
                return Err(Error::Parse { line: lineno, msg: format!("expected {d} values, found {count}") });
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidInput(format!("no embedding row for node {missing}")));
        }
        Ok(Embeddings { d, data })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{} {}", self.node_count(), self.d)?;
        for v in 0..self.node_count() {
            write!(out, "{v}")?;
            for x in self.vector(v as NodeId) {
                write!(out, " {x:.6}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// How a node pair is scored from two vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreOp {
    Dot,
    /// Negated L1 distance (larger = closer).
    L1,
    /// Negated L2 distance.
    L2,
}

impl FromStr for ScoreOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(ScoreOp::Dot),
            "l1" => Ok(ScoreOp::L1),
            "l2" => Ok(ScoreOp::L2),
            other => Err(Error::InvalidConfig(format!("unknown score op '{other}' (expected dot, l1, or l2)"))),
        }
    }
}

pub fn pair_score(op: ScoreOp, a: &[f64], b: &[f64]) -> f64 {
    match op {
        ScoreOp::Dot => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        ScoreOp::L1 => -a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>(),
        ScoreOp::L2 => -a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
    }
}

/// An edge-holdout split: the training residual graph plus held-out
/// positive pairs and sampled non-edge negatives. Stores the training
/// edges so the file alone reconstructs everything evaluation needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalSplit {
    pub node_count: usize,
    pub directed: bool,
    pub seed: u64,
    pub train_edges: Vec<(NodeId, NodeId, f64)>,
    pub test_pos: Vec<(NodeId, NodeId)>,
    pub test_neg: Vec<(NodeId, NodeId)>,
}

impl EvalSplit {
    pub fn train_graph(&self) -> Result<Graph> {
        Graph::from_edges(self.node_count, &self.train_edges, self.directed)
    }

    /// Canonicalized set of every true edge (training and held out).
    fn full_edge_set(&self) -> HashSet<(NodeId, NodeId)> {
        let mut set = HashSet::with_capacity(self.train_edges.len() + self.test_pos.len());
        for &(u, v, _) in &self.train_edges {
            set.insert(canon(u, v, self.directed));
        }
        for &(u, v) in &self.test_pos {
            set.insert(canon(u, v, self.directed));
        }
        set
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<EvalSplit> {
        let reader = BufReader::new(File::open(path)?);
        let split: EvalSplit = serde_json::from_reader(reader)?;
        for &(u, v) in &split.test_pos {
            if u as usize >= split.node_count || v as usize >= split.node_count {
                return Err(Error::NodeOutOfRange { node: u.max(v) as u64, node_count: split.node_count });
            }
        }
        Ok(split)
    }
}

fn canon(u: NodeId, v: NodeId, directed: bool) -> (NodeId, NodeId) {
    if directed || u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Hold out `ratio` of the edges (at least one) as test positives, sample
/// an equal number of uniform non-edges as test negatives, and return the
/// residual training graph together with the split.
pub fn split_edges(g: &Graph, ratio: f64, seed: u64) -> Result<(Graph, EvalSplit)> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidConfig(format!("holdout ratio must lie in [0, 1), found {ratio}")));
    }
    let edges = g.edge_list();
    let holdout = (ratio * edges.len() as f64).floor() as usize;
    if holdout == 0 {
        return Err(Error::InvalidInput(format!(
            "holdout of {} edges at ratio {} is empty; need a larger graph or ratio",
            edges.len(),
            ratio
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, seeds::SALT_SPLIT));
    let mut order: Vec<usize> = (0..edges.len()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let held: HashSet<usize> = order[..holdout].iter().copied().collect();

    let mut train_edges = Vec::with_capacity(edges.len() - holdout);
    let mut test_pos = Vec::with_capacity(holdout);
    for (i, &(u, v, w)) in edges.iter().enumerate() {
        if held.contains(&i) {
            test_pos.push((u, v));
        } else {
            train_edges.push((u, v, w));
        }
    }

    let full: HashSet<(NodeId, NodeId)> = edges.iter().map(|&(u, v, _)| canon(u, v, g.directed())).collect();
    let n = g.node_count() as NodeId;
    let mut test_neg = Vec::with_capacity(holdout);
    let mut chosen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut attempts = 0usize;
    let max_attempts = 100 * holdout.max(1);
    while test_neg.len() < holdout {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Eval(format!(
                "could not sample {holdout} non-edges in {max_attempts} attempts; the graph is too dense"
            )));
        }
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let key = canon(u, v, g.directed());
        if full.contains(&key) || chosen.contains(&key) {
            continue;
        }
        chosen.insert(key);
        test_neg.push(key);
    }

    let split = EvalSplit {
        node_count: g.node_count(),
        directed: g.directed(),
        seed,
        train_edges,
        test_pos,
        test_neg,
    };
    let train = split.train_graph()?;
    Ok((train, split))
}

/// Probability that a random positive outscores a random negative, ties at
/// half credit. Exact all-pairs computation.
pub fn auc_exact(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Eval("ranking needs at least one positive and one negative score".into()));
    }
    let mut wins = 0u64;
    let mut ties = 0u64;
    for &p in pos {
        for &q in neg {
            if p > q {
                wins += 1;
            } else if p == q {
                ties += 1;
            }
        }
    }
    Ok((wins as f64 + 0.5 * ties as f64) / (pos.len() as f64 * neg.len() as f64))
}

/// Monte-Carlo estimate of the same quantity from `samples` random
/// positive/negative pairs.
pub fn auc_sampled<R: Rng>(pos: &[f64], neg: &[f64], samples: usize, rng: &mut R) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Eval("ranking needs at least one positive and one negative score".into()));
    }
    if samples == 0 {
        return Err(Error::Eval("sample count must be positive".into()));
    }
    let mut acc = 0.0;
    for _ in 0..samples {
        let p = pos[rng.gen_range(0..pos.len())];
        let q = neg[rng.gen_range(0..neg.len())];
        if p > q {
            acc += 1.0;
        } else if p == q {
            acc += 0.5;
        }
    }
    Ok(acc / samples as f64)
}

/// Above this many positive/negative comparisons the AUC switches to the
/// sampled estimate (with this many samples).
const AUC_EXACT_LIMIT: u64 = 10_000_000;

fn split_scores(emb: &Embeddings, split: &EvalSplit, op: ScoreOp) -> Result<(Vec<f64>, Vec<f64>)> {
    if emb.node_count() < split.node_count {
        return Err(Error::InvalidInput(format!(
            "split covers {} nodes but embeddings only {}",
            split.node_count,
            emb.node_count()
        )));
    }
    let score = |pairs: &[(NodeId, NodeId)]| -> Vec<f64> {
        pairs.iter().map(|&(u, v)| pair_score(op, emb.vector(u), emb.vector(v))).collect()
    };
    Ok((score(&split.test_pos), score(&split.test_neg)))
}

/// AUC of the held-out positives against the sampled negatives.
pub fn link_prediction_auc(emb: &Embeddings, split: &EvalSplit, op: ScoreOp, seed: u64) -> Result<f64> {
    let (pos, neg) = split_scores(emb, split, op)?;
    if pos.len() as u64 * neg.len() as u64 <= AUC_EXACT_LIMIT {
        auc_exact(&pos, &neg)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, seeds::SALT_AUC));
        auc_sampled(&pos, &neg, AUC_EXACT_LIMIT as usize, &mut rng)
    }
}

/// Mean reciprocal rank of each held-out edge's target against sampled
/// non-neighbor candidates of its source. Tied scores take the mean rank
/// of the tied block.
pub fn link_prediction_mrr(
    emb: &Embeddings,
    split: &EvalSplit,
    op: ScoreOp,
    candidates: usize,
    seed: u64,
) -> Result<f64> {
    if candidates == 0 {
        return Err(Error::InvalidConfig("candidate count must be positive".into()));
    }
    if split.test_pos.is_empty() {
        return Err(Error::Eval("split holds no test edges".into()));
    }
    let full = split.full_edge_set();
    let n = split.node_count as NodeId;
    let mut total = 0.0;
    for (i, &(u, v)) in split.test_pos.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, seeds::SALT_MRR.wrapping_add(i as u64)));
        let mut cand: Vec<NodeId> = Vec::with_capacity(candidates);
        let mut chosen: HashSet<NodeId> = HashSet::new();
        let mut attempts = 0usize;
        let max_attempts = 100 * candidates;
        while cand.len() < candidates {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::Eval(format!(
                    "query {i} ({u} -> {v}): could not sample {candidates} candidate non-neighbors"
                )));
            }
            let w = rng.gen_range(0..n);
            if w == u || w == v || chosen.contains(&w) || full.contains(&canon(u, w, split.directed)) {
                continue;
            }
            chosen.insert(w);
            cand.push(w);
        }
        let target = pair_score(op, emb.vector(u), emb.vector(v));
        let mut better = 0usize;
        let mut ties = 0usize;
        for &w in &cand {
            let s = pair_score(op, emb.vector(u), emb.vector(w));
            if s > target {
                better += 1;
            } else if s == target {
                ties += 1;
            }
        }
        let rank = 1.0 + better as f64 + ties as f64 / 2.0;
        total += 1.0 / rank;
    }
    Ok(total / split.test_pos.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_fixture() {
        let auc = auc_exact(&[0.9, 0.4], &[0.5, 0.1]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn auc_extremes_and_ties() {
        assert_eq!(auc_exact(&[1.0, 2.0], &[0.0]).unwrap(), 1.0);
        assert_eq!(auc_exact(&[0.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(auc_exact(&[0.5, 0.5], &[0.5]).unwrap(), 0.5);
        assert!(auc_exact(&[], &[1.0]).is_err());
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let pos = [0.9, 0.4, 0.7];
        let neg = [0.5, 0.1];
        let f = |x: f64| 3.0 * x + 2.0;
        let tp: Vec<f64> = pos.iter().map(|&x| f(x)).collect();
        let tn: Vec<f64> = neg.iter().map(|&x| f(x)).collect();
        assert_eq!(auc_exact(&pos, &neg).unwrap(), auc_exact(&tp, &tn).unwrap());
    }

    #[test]
    fn sampled_auc_tracks_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos: Vec<f64> = (0..200).map(|_| rng.gen::<f64>() + 0.3).collect();
        let neg: Vec<f64> = (0..150).map(|_| rng.gen::<f64>()).collect();
        let exact = auc_exact(&pos, &neg).unwrap();
        let sampled = auc_sampled(&pos, &neg, 200_000, &mut rng).unwrap();
        assert!((exact - sampled).abs() < 0.01, "{exact} vs {sampled}");
    }

    #[test]
    fn score_ops() {
        let a = [1.0, 2.0];
        let b = [3.0, 4.0];
        assert_eq!(pair_score(ScoreOp::Dot, &a, &b), 11.0);
        assert_eq!(pair_score(ScoreOp::L1, &a, &b), -4.0);
        assert!((pair_score(ScoreOp::L2, &a, &b) - -(8.0f64).sqrt()).abs() < 1e-15);
        assert_eq!("dot".parse::<ScoreOp>().unwrap(), ScoreOp::Dot);
        assert_eq!("l1".parse::<ScoreOp>().unwrap(), ScoreOp::L1);
        assert_eq!("l2".parse::<ScoreOp>().unwrap(), ScoreOp::L2);
        assert!("cosine".parse::<ScoreOp>().is_err());
    }

    fn ring(n: usize) -> Graph {
        let edges: Vec<(NodeId, NodeId, f64)> =
            (0..n).map(|i| (i as NodeId, ((i + 1) % n) as NodeId, 1.0)).collect();
        Graph::from_edges(n, &edges, false).unwrap()
    }

    #[test]
    fn split_holds_out_floor_of_ratio() {
        let g = ring(10); // 10 edges
        let (train, split) = split_edges(&g, 0.1, 7).unwrap();
        assert_eq!(split.test_pos.len(), 1);
        assert_eq!(split.test_neg.len(), 1);
        assert_eq!(split.train_edges.len(), 9);
        assert_eq!(train.entry_count(), 18);
        // negatives are genuine non-edges with distinct endpoints
        for &(u, v) in &split.test_neg {
            assert_ne!(u, v);
            assert!(!g.has_edge(u, v));
            assert!(!g.has_edge(v, u));
        }
    }

    #[test]
    fn split_of_tiny_holdout_errors() {
        let g = ring(10);
        assert!(matches!(split_edges(&g, 0.05, 0), Err(Error::InvalidInput(_))));
        assert!(split_edges(&g, 1.0, 0).is_err());
    }

    #[test]
    fn split_is_deterministic_and_partitions_edges() {
        let g = ring(20);
        let (_, a) = split_edges(&g, 0.25, 3).unwrap();
        let (_, b) = split_edges(&g, 0.25, 3).unwrap();
        assert_eq!(a.test_pos, b.test_pos);
        assert_eq!(a.test_neg, b.test_neg);
        assert_eq!(a.train_edges.len() + a.test_pos.len(), 20);
        let train: HashSet<(NodeId, NodeId)> = a.train_edges.iter().map(|&(u, v, _)| (u, v)).collect();
        for p in &a.test_pos {
            assert!(!train.contains(p));
        }
    }

    #[test]
    fn split_round_trips_through_json() {
        let g = ring(12);
        let (_, split) = split_edges(&g, 0.25, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.json");
        split.save(&path).unwrap();
        let loaded = EvalSplit::load(&path).unwrap();
        assert_eq!(loaded.test_pos, split.test_pos);
        assert_eq!(loaded.test_neg, split.test_neg);
        assert_eq!(loaded.train_edges, split.train_edges);
        let g2 = loaded.train_graph().unwrap();
        assert_eq!(g2.node_count(), 12);
    }

    /// 6 nodes, 1-d embeddings chosen so every rank is known by hand.
    fn handmade_split() -> (Embeddings, EvalSplit) {
        let emb = Embeddings::from_rows(&[
            vec![1.0],
            vec![0.3],
            vec![0.5],
            vec![0.2],
            vec![0.8],
            vec![0.9],
        ])
        .unwrap();
        let split = EvalSplit {
            node_count: 6,
            directed: false,
            seed: 0,
            train_edges: vec![(0, 1, 1.0)],
            test_pos: vec![(0, 2)],
            test_neg: vec![(3, 4)],
        };
        (emb, split)
    }

    #[test]
    fn mrr_hand_check() {
        let (emb, split) = handmade_split();
        // query 0 -> 2 has target dot 0.5; the only eligible candidates are
        // {3, 4, 5} with dots {0.2, 0.8, 0.9}, so rank = 1 + 2 = 3
        let mrr = link_prediction_mrr(&emb, &split, ScoreOp::Dot, 3, 0).unwrap();
        assert!((mrr - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mrr_tie_takes_mean_rank() {
        let mut rows: Vec<Vec<f64>> = vec![
            vec![1.0],
            vec![0.3],
            vec![0.5],
            vec![0.5], // ties the target's score
            vec![0.1],
            vec![0.2],
        ];
        let emb = Embeddings::from_rows(&rows).unwrap();
        let split = EvalSplit {
            node_count: 6,
            directed: false,
            seed: 0,
            train_edges: vec![(0, 1, 1.0)],
            test_pos: vec![(0, 2)],
            test_neg: vec![(3, 4)],
        };
        // candidates {3,4,5} score {0.5, 0.1, 0.2}: one tie, none better,
        // rank = 1 + 0 + 1/2
        let mrr = link_prediction_mrr(&emb, &split, ScoreOp::Dot, 3, 0).unwrap();
        assert!((mrr - 1.0 / 1.5).abs() < 1e-12);
        rows[3][0] = 2.0; // now strictly better: rank 2
        let emb = Embeddings::from_rows(&rows).unwrap();
        let mrr = link_prediction_mrr(&emb, &split, ScoreOp::Dot, 3, 0).unwrap();
        assert!((mrr - 0.5).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_defeats_negative_sampling() {
        // on K5 every non-self pair is an edge: the splitter cannot find
        // non-edge negatives, and ranking has no candidates either
        let mut edges = Vec::new();
        for u in 0..5u32 {
            for v in (u + 1)..5 {
                edges.push((u, v, 1.0));
            }
        }
        let g = Graph::from_edges(5, &edges, false).unwrap();
        assert!(matches!(split_edges(&g, 0.1, 0), Err(Error::Eval(_))));

        let train_edges: Vec<(NodeId, NodeId, f64)> =
            edges.iter().filter(|&&(u, v, _)| (u, v) != (0, 1)).copied().collect();
        let split = EvalSplit {
            node_count: 5,
            directed: false,
            seed: 0,
            train_edges,
            test_pos: vec![(0, 1)],
            test_neg: vec![(2, 3)],
        };
        let emb = Embeddings::from_rows(&(0..5).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        assert!(matches!(
            link_prediction_mrr(&emb, &split, ScoreOp::Dot, 2, 0),
            Err(Error::Eval(_))
        ));
    }

    #[test]
    fn auc_driver_on_handmade_split() {
        let (emb, split) = handmade_split();
        // pos score: 0*2 -> 0.5; neg score: 3*4 -> 0.16
        let auc = link_prediction_auc(&emb, &split, ScoreOp::Dot, 0).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn embeddings_file_round_trip() {
        let emb = Embeddings::from_rows(&[vec![0.125, -3.5], vec![1.0, 2.0], vec![-0.001953125, 7.25]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        emb.save(&path).unwrap();
        let loaded = Embeddings::load(&path).unwrap();
        assert_eq!(loaded.d(), 2);
        assert_eq!(loaded.node_count(), 3);
        for v in 0..3u32 {
            for (a, b) in loaded.vector(v).iter().zip(emb.vector(v)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn embeddings_loader_rejects_malformed_input() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| -> std::path::PathBuf {
            let p = dir.path().join(name);
            std::fs::write(&p, body).unwrap();
            p
        };
        assert!(matches!(
            Embeddings::load(write("short.txt", "2 2\n0 1.0 2.0\n")),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            Embeddings::load(write("dup.txt", "2 2\n0 1 2\n0 3 4\n")),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Embeddings::load(write("wide.txt", "1 2\n0 1 2 3\n")),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Embeddings::load(write("range.txt", "1 2\n4 1 2\n")),
            Err(Error::NodeOutOfRange { .. })
        ));
        assert!(Embeddings::load(write("empty.txt", "")).is_err());
    }
}
