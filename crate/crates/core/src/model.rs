//! Trainable parameters and the aggregation map from group sets to node
//! embeddings.
//!
//! Three tables are learned: a vertex-role and a context-role embedding row
//! per *group*, plus one small kernel row per *node* holding the weights of
//! its group set. A node's embedding in either role is
//!
//! ```text
//! f(v) = tanh( sum_i kernel[v][i] * role_table[gset[v][i]] )
//! ```
//!
//! so the parameter count is `2 * group_count * d + node_count * n` instead
//! of the `2 * node_count * d'` a per-node lookup table would need.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::NodeId;
use crate::groupmap::GroupSetTable;
use crate::seeds;

/// Which embedding table an aggregation reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Vertex,
    Context,
}

/// All trainable state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters {
    d: usize,
    n: usize,
    group_count: usize,
    node_count: usize,
    vertex_group_emb: Vec<f64>,
    context_group_emb: Vec<f64>,
    kernels: Vec<f64>,
}

impl ModelParameters {
    /// Fresh model: vertex rows uniform in `[-0.5/d, 0.5/d]`, context rows
    /// zero, kernels flat at `1/n`. Warns (but proceeds) when the layout is
    /// not actually smaller than a `2 d x node_count` lookup table.
    pub fn init(group_count: usize, node_count: usize, d: usize, n: usize, seed: u64) -> Self {
        assert!(group_count > 0 && node_count > 0 && d > 0 && n > 0, "model dimensions must be positive");
        let compressed = n * node_count + 2 * d * group_count;
        if compressed >= 2 * d * node_count {
            eprintln!(
                "warning: {compressed} parameters is not smaller than a {}-parameter lookup table",
                2 * d * node_count
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, seeds::SALT_INIT));
        let scale = 1.0 / d as f64;
        let vertex_group_emb: Vec<f64> = (0..group_count * d).map(|_| (rng.gen::<f64>() - 0.5) * scale).collect();
        ModelParameters {
            d,
            n,
            group_count,
            node_count,
            vertex_group_emb,
            context_group_emb: vec![0.0; group_count * d],
            kernels: vec![1.0 / n as f64; node_count * n],
        }
    }

    /// Zero the kernel slots that groupmap marked as padding, making the
    /// padded groups inert at the start of training.
    pub fn zero_padding_slots(&mut self, table: &GroupSetTable) {
        assert_eq!(table.node_count(), self.node_count);
        assert_eq!(table.set_size(), self.n);
        for v in 0..self.node_count {
            let observed = table.observed_count(v as NodeId);
            for slot in observed..self.n {
                self.kernels[v * self.n + slot] = 0.0;
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn set_size(&self) -> usize {
        self.n
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn parameter_count(&self) -> usize {
        2 * self.group_count * self.d + self.node_count * self.n
    }

    pub fn role_row(&self, role: Role, g: u32) -> &[f64] {
        let table = match role {
            Role::Vertex => &self.vertex_group_emb,
            Role::Context => &self.context_group_emb,
        };
        &table[g as usize * self.d..(g as usize + 1) * self.d]
    }

    pub fn role_row_mut(&mut self, role: Role, g: u32) -> &mut [f64] {
        let d = self.d;
        let table = match role {
            Role::Vertex => &mut self.vertex_group_emb,
            Role::Context => &mut self.context_group_emb,
        };
        &mut table[g as usize * d..(g as usize + 1) * d]
    }

    pub fn kernel_row(&self, v: NodeId) -> &[f64] {
        &self.kernels[v as usize * self.n..(v as usize + 1) * self.n]
    }

    pub fn kernel_row_mut(&mut self, v: NodeId) -> &mut [f64] {
        &mut self.kernels[v as usize * self.n..(v as usize + 1) * self.n]
    }

    /// `out = tanh(sum_i kernel[i] * role_row(gset[i]))`.
    pub fn aggregate_into(&self, gset: &[u32], kernel: &[f64], role: Role, out: &mut [f64]) {
        assert_eq!(gset.len(), kernel.len());
        assert_eq!(out.len(), self.d);
        out.fill(0.0);
        for (&g, &lambda) in gset.iter().zip(kernel) {
            if lambda == 0.0 {
                continue;
            }
            let row = self.role_row(role, g);
            for (o, &x) in out.iter_mut().zip(row) {
                *o += lambda * x;
            }
        }
        for o in out.iter_mut() {
            *o = o.tanh();
        }
    }

    pub fn aggregate(&self, gset: &[u32], kernel: &[f64], role: Role) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        self.aggregate_into(gset, kernel, role, &mut out);
        out
    }

    /// Vertex-role embedding of node `v` under its group set and kernel.
    pub fn node_embedding(&self, table: &GroupSetTable, v: NodeId) -> Vec<f64> {
        self.aggregate(table.set(v), self.kernel_row(v), Role::Vertex)
    }

    /// Name of the first table holding a non-finite value, if any.
    pub fn find_non_finite(&self) -> Option<&'static str> {
        if !self.vertex_group_emb.iter().all(|x| x.is_finite()) {
            return Some("vertex_group_emb");
        }
        if !self.context_group_emb.iter().all(|x| x.is_finite()) {
            return Some("context_group_emb");
        }
        if !self.kernels.iter().all(|x| x.is_finite()) {
            return Some("kernels");
        }
        None
    }

    /// Text export: header `node_count d`, then `id v1 .. vd` per node with
    /// six digits after the decimal point (the usual text-embedding format).
    pub fn write_embeddings<W: Write>(&self, table: &GroupSetTable, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.node_count, self.d)?;
        let mut line = String::new();
        for v in 0..self.node_count as NodeId {
            let emb = self.node_embedding(table, v);
            line.clear();
            line.push_str(&v.to_string());
            for x in emb {
                line.push_str(&format!(" {x:.6}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}
