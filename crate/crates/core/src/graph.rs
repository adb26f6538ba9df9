//! Compact CSR adjacency storage for large sparse graphs.
//!
//! A [`Graph`] is immutable after construction and safe to share across
//! threads without synchronization. Undirected inputs are symmetrized at
//! load time, so every undirected edge (including self-loops) occupies two
//! adjacency slots.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// Dense node identifier.
pub type NodeId = u32;

/// Magic bytes of the binary cache format.
const CACHE_MAGIC: &[u8; 4] = b"CSNE";
const CACHE_VERSION: u8 = 1;

/// CSR graph: `offsets` holds prefix sums of out-degrees, `targets` and
/// `weights` hold the flattened adjacency lists in input order.
#[derive(Clone, Debug)]
pub struct Graph {
    node_count: usize,
    directed: bool,
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    weights: Vec<f64>,
    /// True when every stored weight is exactly 1.0 (fast path for walks).
    unit_weights: bool,
}

impl Graph {
    /// Build a graph from a list of `(src, dst, weight)` edges.
    ///
    /// Undirected edges are inserted in both adjacency lists (self-loops
    /// twice in the same list, so degree sums stay consistent).
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId, f64)], directed: bool) -> Result<Self> {
        let mut degree = vec![0usize; node_count];
        for &(u, v, w) in edges {
            if (u as usize) >= node_count || (v as usize) >= node_count {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for node_count {node_count}"
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) has non-positive weight {w}")));
            }
            degree[u as usize] += 1;
            if !directed {
                degree[v as usize] += 1;
            }
        }

        let mut offsets = vec![0usize; node_count + 1];
        for v in 0..node_count {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let slots = offsets[node_count];
        let mut targets = vec![0 as NodeId; slots];
        let mut weights = vec![0f64; slots];
        let mut cursor = offsets[..node_count].to_vec();
        for &(u, v, w) in edges {
            let i = cursor[u as usize];
            targets[i] = v;
            weights[i] = w;
            cursor[u as usize] += 1;
            if !directed {
                let j = cursor[v as usize];
                targets[j] = u;
                weights[j] = w;
                cursor[v as usize] += 1;
            }
        }
        let unit_weights = weights.iter().all(|&w| w == 1.0);
        Ok(Graph { node_count, directed, offsets, targets, weights, unit_weights })
    }

    /// Parse a whitespace-separated edge list (`src dst [weight]` per line).
    ///
    /// Lines starting with `#` and blank lines are skipped. `node_count`
    /// becomes `1 + max id`; duplicate edges are kept as parallel edges.
    pub fn load_edge_list<R: Read>(source: R, directed: bool) -> Result<Self> {
        let reader = BufReader::new(source);
        let mut edges: Vec<(NodeId, NodeId, f64)> = Vec::new();
        let mut max_id: Option<NodeId> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            if tokens.len() != 2 && tokens.len() != 3 {
                return Err(Error::Parse { line: lineno, msg: format!("expected 2 or 3 fields, found {}", tokens.len()) });
            }
            let u: NodeId = tokens[0]
                .parse()
                .map_err(|_| Error::Parse { line: lineno, msg: format!("bad node id {:?}", tokens[0]) })?;
            let v: NodeId = tokens[1]
                .parse()
                .map_err(|_| Error::Parse { line: lineno, msg: format!("bad node id {:?}", tokens[1]) })?;
            let w: f64 = if tokens.len() == 3 {
                let w: f64 = tokens[2]
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("bad weight {:?}", tokens[2]) })?;
                if !w.is_finite() || w <= 0.0 {
                    return Err(Error::Parse { line: lineno, msg: format!("weight must be positive, found {w}") });
                }
                w
            } else {
                1.0
            };
            max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
            edges.push((u, v, w));
        }
        let max_id = max_id.ok_or(Error::EmptyInput)?;
        Self::from_edges(max_id as usize + 1, &edges, directed)
    }

    /// Like [`Graph::load_edge_list`] but accepts arbitrary string tokens as
    /// node names and remaps them to dense ids in order of first appearance.
    ///
    /// Returns the graph together with the name of each dense id, so callers
    /// can persist the mapping next to their outputs.
    pub fn load_edge_list_remapped<R: Read>(source: R, directed: bool) -> Result<(Self, Vec<String>)> {
        let reader = BufReader::new(source);
        let mut names: Vec<String> = Vec::new();
        let mut index: std::collections::HashMap<String, NodeId> = std::collections::HashMap::new();
        let mut intern = |tok: &str, names: &mut Vec<String>| -> NodeId {
            if let Some(&id) = index.get(tok) {
                return id;
            }
            let id = names.len() as NodeId;
            names.push(tok.to_string());
            index.insert(tok.to_string(), id);
            id
        };
        let mut edges: Vec<(NodeId, NodeId, f64)> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            if tokens.len() != 2 && tokens.len() != 3 {
                return Err(Error::Parse { line: lineno, msg: format!("expected 2 or 3 fields, found {}", tokens.len()) });
            }
            let w: f64 = if tokens.len() == 3 {
                let w: f64 = tokens[2]
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("bad weight {:?}", tokens[2]) })?;
                if !w.is_finite() || w <= 0.0 {
                    return Err(Error::Parse { line: lineno, msg: format!("weight must be positive, found {w}") });
                }
                w
            } else {
                1.0
            };
            let u = intern(tokens[0], &mut names);
            let v = intern(tokens[1], &mut names);
            edges.push((u, v, w));
        }
        if edges.is_empty() {
            return Err(Error::EmptyInput);
        }
        let g = Self::from_edges(names.len(), &edges, directed)?;
        Ok((g, names))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Number of stored adjacency entries (directed half-edges).
    pub fn entry_count(&self) -> usize {
        self.targets.len()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.unit_weights
    }

    pub fn out_degree(&self, v: NodeId) -> Result<usize> {
        self.check_node(v)?;
        let v = v as usize;
        Ok(self.offsets[v + 1] - self.offsets[v])
    }

    /// Contiguous adjacency slice for `v`, in input order.
    pub fn neighbors(&self, v: NodeId) -> Result<impl Iterator<Item = (NodeId, f64)> + '_> {
        self.check_node(v)?;
        Ok(self.neighbor_slice(v).0.iter().copied().zip(self.neighbor_slice(v).1.iter().copied()))
    }

    /// Unchecked adjacency slices; callers on hot paths validate ids once.
    pub fn neighbor_slice(&self, v: NodeId) -> (&[NodeId], &[f64]) {
        let v = v as usize;
        let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
        (&self.targets[lo..hi], &self.weights[lo..hi])
    }

    pub fn degree_unchecked(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Whether `u`'s adjacency list contains `v` (linear scan; adjacency is
    /// kept in input order, so no binary search is possible).
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        if (u as usize) >= self.node_count {
            return false;
        }
        self.neighbor_slice(u).0.contains(&v)
    }

    /// Sum of incident edge weights (equals the degree on unweighted input).
    pub fn weighted_degree(&self, v: NodeId) -> f64 {
        self.neighbor_slice(v).1.iter().sum()
    }

    fn check_node(&self, v: NodeId) -> Result<()> {
        if (v as usize) < self.node_count {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: v as u64, node_count: self.node_count })
        }
    }

    /// Reconstruct an input-equivalent edge list.
    ///
    /// For directed graphs every stored entry is an edge. For undirected
    /// graphs each symmetrized pair is emitted once (self-loops once per
    /// stored duplicate pair), so feeding the result back through
    /// [`Graph::from_edges`] reproduces the same multiset of adjacency
    /// entries.
    pub fn edge_list(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut edges = Vec::new();
        for u in 0..self.node_count as NodeId {
            let (nbrs, ws) = self.neighbor_slice(u);
            let mut self_loops: Vec<f64> = Vec::new();
            for (&v, &w) in nbrs.iter().zip(ws) {
                if self.directed {
                    edges.push((u, v, w));
                } else if u < v {
                    edges.push((u, v, w));
                } else if u == v {
                    self_loops.push(w);
                }
            }
            if !self.directed && !self_loops.is_empty() {
                // Each input self-loop was stored twice with equal weight;
                // emit one copy per pair.
                self_loops.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for pair in self_loops.chunks(2) {
                    edges.push((u, u, pair[0]));
                }
            }
        }
        edges
    }

    /// Write the graph back out as an edge-list text file.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (u, v, w) in self.edge_list() {
            if w == 1.0 {
                writeln!(out, "{u} {v}")?;
            } else {
                writeln!(out, "{u} {v} {w}")?;
            }
        }
        Ok(())
    }

    /// Serialize to the little-endian binary cache format.
    pub fn save_cache<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&[CACHE_VERSION])?;
        out.write_all(&(self.node_count as u64).to_le_bytes())?;
        out.write_all(&[self.directed as u8])?;
        for &o in &self.offsets {
            out.write_all(&(o as u64).to_le_bytes())?;
        }
        for &t in &self.targets {
            out.write_all(&t.to_le_bytes())?;
        }
        for &w in &self.weights {
            out.write_all(&w.to_le_bytes())?;
        }
        Ok(())
    }

    /// Load a graph previously written by [`Graph::save_cache`].
    pub fn load_cache<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::InvalidInput("bad cache magic".into()));
        }
        let mut byte = [0u8; 1];
        input.read_exact(&mut byte)?;
        if byte[0] != CACHE_VERSION {
            return Err(Error::InvalidInput(format!("unsupported cache version {}", byte[0])));
        }
        let mut u64buf = [0u8; 8];
        input.read_exact(&mut u64buf)?;
        let node_count = u64::from_le_bytes(u64buf) as usize;
        input.read_exact(&mut byte)?;
        let directed = byte[0] != 0;
        let mut offsets = Vec::with_capacity(node_count + 1);
        for _ in 0..=node_count {
            input.read_exact(&mut u64buf)?;
            offsets.push(u64::from_le_bytes(u64buf) as usize);
        }
        let entries = *offsets.last().unwrap_or(&0);
        let mut targets = Vec::with_capacity(entries);
        let mut u32buf = [0u8; 4];
        for _ in 0..entries {
            input.read_exact(&mut u32buf)?;
            targets.push(u32::from_le_bytes(u32buf));
        }
        let mut weights = Vec::with_capacity(entries);
        for _ in 0..entries {
            input.read_exact(&mut u64buf)?;
            weights.push(f64::from_le_bytes(u64buf));
        }
        let unit_weights = weights.iter().all(|&w| w == 1.0);
        Ok(Graph { node_count, directed, offsets, targets, weights, unit_weights })
    }
}
