//! Reference skip-gram model with one independent vector per node.
//!
//! This is the classical lookup-table formulation: no sharing, no
//! aggregation, two dense `|V| x d` tables. It exists to benchmark the
//! compressed model against an uncompressed one holding the same number
//! of parameters (a much smaller `d`). Single-threaded on purpose — it is
//! a yardstick, not a production path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sampler::{build_training_walks, window_pairs, LinePairSampler, Method, NegativeSampler, SamplerConfig};
use crate::seeds;

pub struct LookupModel {
    d: usize,
    vertex: Vec<f64>,
    context: Vec<f64>,
}

impl LookupModel {
    fn init(node_count: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, seeds::SALT_INIT));
        let vertex = (0..node_count * d).map(|_| (rng.gen::<f64>() - 0.5) / d as f64).collect();
        LookupModel { d, vertex, context: vec![0.0; node_count * d] }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn node_count(&self) -> usize {
        self.vertex.len() / self.d
    }

    pub fn node_vector(&self, v: NodeId) -> &[f64] {
        &self.vertex[v as usize * self.d..(v as usize + 1) * self.d]
    }

    /// Total stored parameter count (both tables).
    pub fn parameter_count(&self) -> usize {
        self.vertex.len() + self.context.len()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Train a lookup-table skip-gram model with the same pair streams,
/// negative distribution, and learning-rate schedule as the compressed
/// trainer's defaults (base rate 0.025 decaying linearly to 1e-4 of it).
pub fn train_lookup(g: &Graph, scfg: &SamplerConfig, d: usize, epochs: f64, seed: u64) -> Result<LookupModel> {
    scfg.validate()?;
    if d == 0 {
        return Err(Error::InvalidConfig("embedding dimension must be positive".into()));
    }
    if !(epochs >= 0.0) {
        return Err(Error::InvalidConfig("epochs must be >= 0".into()));
    }
    let alpha = 0.025f64;
    let min_ratio = 1e-4f64;

    let mut model = LookupModel::init(g.node_count(), d, seed);
    let negatives = NegativeSampler::new(g, scfg.negative_exponent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, seeds::SALT_WORKER));

    // materialize this run's pair stream up front; the baseline graphs are
    // small enough that simplicity wins
    let pairs: Vec<(NodeId, NodeId)> = match scfg.method {
        Method::Line2 => {
            let sampler = LinePairSampler::new(g)?;
            let draws = (epochs * sampler.epoch_len() as f64).round() as u64;
            (0..draws).map(|_| sampler.sample(&mut rng)).collect()
        }
        Method::Deepwalk | Method::Node2vec => {
            let corpus = build_training_walks(g, scfg, seed)?;
            let full = epochs.floor() as u64;
            let prefix = ((epochs - epochs.floor()) * corpus.walks.len() as f64).round() as usize;
            let mut out = Vec::new();
            for epoch in 0..=full {
                let limit = if epoch == full { prefix } else { corpus.walks.len() };
                for walk in &corpus.walks[..limit] {
                    out.extend(window_pairs(walk, corpus.window));
                }
            }
            out
        }
    };
    let total = pairs.len() as u64;

    let mut negs: Vec<NodeId> = Vec::with_capacity(scfg.negatives);
    let mut grad_v = vec![0.0f64; d];
    let mut ctx_snapshot = vec![0.0f64; d];
    for (done, &(u, v)) in pairs.iter().enumerate() {
        negs.clear();
        for _ in 0..scfg.negatives {
            let mut pick = negatives.sample(&mut rng);
            for _ in 0..10 {
                if pick != u {
                    break;
                }
                pick = negatives.sample(&mut rng);
            }
            negs.push(pick);
        }
        let lr = alpha * (1.0 - done as f64 / total as f64).max(min_ratio);

        grad_v.fill(0.0);
        let vr = v as usize * d;
        for (t, &c) in std::iter::once(&u).chain(negs.iter()).enumerate() {
            let cr = c as usize * d;
            let x: f64 = (0..d).map(|j| model.context[cr + j] * model.vertex[vr + j]).sum();
            let coef = if t == 0 { -(1.0 - sigmoid(x)) } else { sigmoid(x) };
            ctx_snapshot.copy_from_slice(&model.context[cr..cr + d]);
            for j in 0..d {
                grad_v[j] += coef * ctx_snapshot[j];
                model.context[cr + j] -= lr * coef * model.vertex[vr + j];
            }
        }
        for j in 0..d {
            model.vertex[vr + j] -= lr * grad_v[j];
        }
    }
    for &x in model.vertex.iter().chain(&model.context) {
        if !x.is_finite() {
            return Err(Error::Diverged("non-finite value in lookup model".into()));
        }
    }
    Ok(model)
}
