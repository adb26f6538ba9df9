//! Compressive network embedding.
//!
//! Instead of a free d-dimensional vector per node, the model partitions the
//! graph into groups, learns one embedding row per *group*, and represents
//! each node as a tanh-squashed weighted sum of the rows of the few groups
//! that dominate its random-walk neighborhood. The per-node weights (a small
//! aggregation kernel) and the shared group rows are trained jointly with
//! skip-gram negative sampling over edge or walk-window pairs, which shrinks
//! the parameter budget from `2 d' |V|` floats to `n |V| + 2 d |G|`.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`graph`] — CSR storage and edge-list / binary-cache I/O
//! 2. [`partition`] — size-constrained label propagation into `k` groups
//! 3. [`groupmap`] — per-node group sets ranked by walk visit frequency
//! 4. [`model`] — parameter store and the tanh aggregation map
//! 5. [`sampler`] — alias tables, pair streams, negative sampling
//! 6. [`trainer`] — lock-free multi-threaded SGD
//! 7. [`eval`] — link-prediction (AUC, MRR) and node-classification (F1)
//! 8. [`baseline`] — uncompressed lookup-table embeddings for A/B runs
//!
//! The `cosine` binary exposes each stage as a subcommand plus an
//! end-to-end `pipeline` mode; see the crate README for file formats.

pub mod baseline;
pub mod budget;
pub mod error;
pub mod eval;
pub mod graph;
pub mod groupmap;
pub mod model;
pub mod partition;
pub mod pipeline;
pub mod sampler;
mod seeds;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
