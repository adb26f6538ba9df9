//! Parameter accounting: how many floats the shared-group model stores
//! versus a lookup table with one vector pair per node.
//!
//! The shared model keeps one kernel row per node (`n` floats) plus two
//! role tables over the groups (`2 * d * |G|`); the lookup model keeps two
//! role tables over the nodes (`2 * d' * |V|`). With group counts far below
//! the node count the ratio tends to `n / (2 * d')`, independent of `d`.

use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BudgetReport {
    pub node_count: usize,
    pub group_count: usize,
    pub dim: usize,
    pub set_size: usize,
    pub baseline_dim: usize,
    pub compressed_params: u64,
    pub baseline_params: u64,
    pub ratio: f64,
}

/// Floats stored by the shared-group model.
pub fn compressed_parameter_count(node_count: usize, group_count: usize, d: usize, n: usize) -> u64 {
    n as u64 * node_count as u64 + 2 * d as u64 * group_count as u64
}

/// Floats stored by a per-node lookup model of dimension `dim`.
pub fn baseline_parameter_count(node_count: usize, dim: usize) -> u64 {
    2 * dim as u64 * node_count as u64
}

pub fn report_budget(
    node_count: usize,
    group_count: usize,
    d: usize,
    n: usize,
    baseline_dim: usize,
) -> BudgetReport {
    let compressed_params = compressed_parameter_count(node_count, group_count, d, n);
    let baseline_params = baseline_parameter_count(node_count, baseline_dim);
    BudgetReport {
        node_count,
        group_count,
        dim: d,
        set_size: n,
        baseline_dim,
        compressed_params,
        baseline_params,
        ratio: compressed_params as f64 / baseline_params as f64,
    }
}

/// Lookup dimension whose parameter count is closest to the compressed
/// model's, at least 1.
pub fn matched_baseline_dim(node_count: usize, group_count: usize, d: usize, n: usize) -> usize {
    let compressed = compressed_parameter_count(node_count, group_count, d, n) as f64;
    let dim = (compressed / (2.0 * node_count as f64)).round() as usize;
    dim.max(1)
}

/// Group count that makes the compressed model's parameter count match a
/// lookup model of dimension `baseline_dim`, clamped to `[1, node_count]`.
pub fn matched_group_count(node_count: usize, d: usize, n: usize, baseline_dim: usize) -> usize {
    let spare = baseline_parameter_count(node_count, baseline_dim) as f64 - (n * node_count) as f64;
    let groups = (spare / (2.0 * d as f64)).floor() as isize;
    groups.clamp(1, node_count as isize) as usize
}
