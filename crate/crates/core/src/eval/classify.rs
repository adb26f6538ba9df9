//! Multi-label node classification on top of trained embeddings:
//! one-vs-rest logistic regression with the usual top-ℓ prediction
//! protocol (a node with ℓ true labels receives its ℓ highest-scoring
//! labels), reported as micro- and macro-averaged F1.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::Embeddings;
use crate::graph::NodeId;
use crate::seeds;

/// Per-node label sets, densely indexed by node id.
#[derive(Clone, Debug)]
pub struct LabelSet {
    label_count: usize,
    labels_of: Vec<Vec<u32>>,
}

impl LabelSet {
    pub fn from_rows(labels_of: Vec<Vec<u32>>) -> LabelSet {
        let label_count = labels_of
            .iter()
            .flat_map(|ls| ls.iter())
            .max()
            .map_or(0, |&m| m as usize + 1);
        let mut labels_of = labels_of;
        for ls in &mut labels_of {
            ls.sort_unstable();
            ls.dedup();
        }
        LabelSet { label_count, labels_of }
    }

    /// Parse `"node_id label_id"` lines ('#' starts a comment, repeated
    /// pairs collapse). Nodes never mentioned stay unlabeled.
    pub fn load<P: AsRef<Path>>(path: P, node_count: usize) -> Result<LabelSet> {
        let reader = BufReader::new(File::open(path)?);
        let mut labels_of = vec![Vec::new(); node_count];
        let mut any = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let tokens: Vec<&str> = body.split_whitespace().collect();
            let [node_tok, label_tok] = tokens[..] else {
                return Err(Error::Parse { line: lineno, msg: format!("expected 'node label', found '{body}'") });
            };
            let node: usize = node_tok
                .parse()
                .map_err(|_| Error::Parse { line: lineno, msg: format!("bad node id '{node_tok}'") })?;
            let label: u32 = label_tok
                .parse()
                .map_err(|_| Error::Parse { line: lineno, msg: format!("bad label id '{label_tok}'") })?;
            if node >= node_count {
                return Err(Error::NodeOutOfRange { node: node as u64, node_count });
            }
            labels_of[node].push(label);
            any = true;
        }
        if !any {
            return Err(Error::EmptyInput);
        }
        Ok(LabelSet::from_rows(labels_of))
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn labels(&self, v: NodeId) -> &[u32] {
        &self.labels_of[v as usize]
    }

    pub fn node_count(&self) -> usize {
        self.labels_of.len()
    }

    /// Ids of all nodes carrying at least one label.
    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        (0..self.labels_of.len() as NodeId)
            .filter(|&v| !self.labels_of[v as usize].is_empty())
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyConfig {
    /// Fraction of the labeled nodes used to fit the classifiers.
    pub train_ratio: f64,
    pub l2: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { train_ratio: 0.5, l2: 1e-4, iterations: 500, seed: 0 }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::InvalidConfig("train_ratio must lie in (0, 1)".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::InvalidConfig("l2 must be >= 0".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub evaluated_labels: usize,
    /// Labels with no positive training example, excluded from the metrics.
    pub skipped_labels: Vec<u32>,
    pub train_nodes: usize,
    pub test_nodes: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fit a binary logistic regression by full-batch gradient descent with a
/// fixed step of `1 / (0.25 * max_i ||x_i||^2 + l2)` (the logistic loss is
/// 0.25-smooth, so this step never diverges). The bias term is the last
/// weight and is left unregularized.
fn train_logistic(xs: &[&[f64]], ys: &[f64], l2: f64, iterations: usize) -> Vec<f64> {
    let d = xs[0].len();
    let m = xs.len() as f64;
    let max_sq = xs
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .fold(0.0f64, f64::max);
    let lr = 1.0 / (0.25 * max_sq + l2);
    let mut w = vec![0.0f64; d + 1];
    let mut grad = vec![0.0f64; d + 1];
    for _ in 0..iterations {
        grad.fill(0.0);
        for (x, &y) in xs.iter().zip(ys) {
            let z = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d];
            let c = sigmoid(z) - y;
            for j in 0..d {
                grad[j] += c * x[j];
            }
            grad[d] += c;
        }
        for j in 0..d {
            w[j] -= lr * (grad[j] / m + l2 * w[j]);
        }
        w[d] -= lr * grad[d] / m;
    }
    w
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    2.0 * p * r / (p + r)
}

/// Micro/macro F1 of predicted label sets against the truth. `labels`
/// enumerates the label ids that participate in the macro average.
pub fn f1_scores(truth: &[Vec<u32>], predicted: &[Vec<u32>], labels: &[u32]) -> (f64, f64) {
    assert_eq!(truth.len(), predicted.len());
    let mut micro_tp = 0u64;
    let mut micro_fp = 0u64;
    let mut micro_fn = 0u64;
    let mut macro_sum = 0.0;
    for &label in labels {
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_ = 0u64;
        for (t, p) in truth.iter().zip(predicted) {
            let in_truth = t.contains(&label);
            let in_pred = p.contains(&label);
            match (in_truth, in_pred) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        micro_tp += tp;
        micro_fp += fp;
        micro_fn += fn_;
        macro_sum += f1(tp, fp, fn_);
    }
    let micro = f1(micro_tp, micro_fp, micro_fn);
    let macro_ = if labels.is_empty() { 0.0 } else { macro_sum / labels.len() as f64 };
    (micro, macro_)
}

/// Run the full protocol with an explicit train/test node split.
pub fn evaluate_with_split(
    emb: &Embeddings,
    labels: &LabelSet,
    train_nodes: &[NodeId],
    test_nodes: &[NodeId],
    cfg: &ClassifyConfig,
) -> Result<ClassifyReport> {
    cfg.validate()?;
    if train_nodes.is_empty() || test_nodes.is_empty() {
        return Err(Error::Eval("both classification splits need at least one labeled node".into()));
    }
    if labels.node_count() > emb.node_count() {
        return Err(Error::InvalidInput(format!(
            "label file covers {} nodes but embeddings only {}",
            labels.node_count(),
            emb.node_count()
        )));
    }

    let features: Vec<&[f64]> = train_nodes.iter().map(|&v| emb.vector(v)).collect();
    let mut trained: Vec<u32> = Vec::new();
    let mut skipped: Vec<u32> = Vec::new();
    let mut weights: Vec<Vec<f64>> = Vec::new();
    let mut ys = vec![0.0f64; train_nodes.len()];
    for label in 0..labels.label_count() as u32 {
        let mut positives = 0usize;
        for (i, &v) in train_nodes.iter().enumerate() {
            let y = labels.labels(v).contains(&label);
            ys[i] = f64::from(y);
            positives += usize::from(y);
        }
        if positives == 0 {
            // only warn about labels that actually occur somewhere
            if test_nodes.iter().any(|&v| labels.labels(v).contains(&label)) {
                eprintln!("label {label} has no positive training example; excluding it from the metrics");
                skipped.push(label);
            }
            continue;
        }
        trained.push(label);
        weights.push(train_logistic(&features, &ys, cfg.l2, cfg.iterations));
    }
    if trained.is_empty() {
        return Err(Error::Eval("no label has a positive training example".into()));
    }

    let d = emb.d();
    let mut truth: Vec<Vec<u32>> = Vec::with_capacity(test_nodes.len());
    let mut predicted: Vec<Vec<u32>> = Vec::with_capacity(test_nodes.len());
    for &v in test_nodes {
        let true_here: Vec<u32> = labels
            .labels(v)
            .iter()
            .copied()
            .filter(|l| !skipped.contains(l))
            .collect();
        let x = emb.vector(v);
        let mut scored: Vec<(f64, u32)> = trained
            .iter()
            .zip(&weights)
            .map(|(&label, w)| {
                let z = x.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() + w[d];
                (z, label)
            })
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let take = true_here.len().min(scored.len());
        predicted.push(scored[..take].iter().map(|&(_, l)| l).collect());
        truth.push(true_here);
    }

    let (micro_f1, macro_f1) = f1_scores(&truth, &predicted, &trained);
    Ok(ClassifyReport {
        micro_f1,
        macro_f1,
        evaluated_labels: trained.len(),
        skipped_labels: skipped,
        train_nodes: train_nodes.len(),
        test_nodes: test_nodes.len(),
    })
}

/// Shuffle the labeled nodes, train on the leading `train_ratio` share,
/// and score the rest.
pub fn evaluate(emb: &Embeddings, labels: &LabelSet, cfg: &ClassifyConfig) -> Result<ClassifyReport> {
    cfg.validate()?;
    let mut nodes = labels.labeled_nodes();
    if nodes.len() < 2 {
        return Err(Error::Eval(format!(
            "classification needs at least two labeled nodes, found {}",
            nodes.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(cfg.seed, seeds::SALT_CLASSIFY));
    nodes.shuffle(&mut rng);
    let cut = ((cfg.train_ratio * nodes.len() as f64).floor() as usize).clamp(1, nodes.len() - 1);
    evaluate_with_split(emb, labels, &nodes[..cut], &nodes[cut..], cfg)
}
