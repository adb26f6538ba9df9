//! Skip-gram-with-negative-sampling training over aggregated embeddings,
//! with lock-free multi-threaded SGD.
//!
//! For a pair `(u, v)` the context-role aggregate of `u` is scored against
//! the vertex-role aggregate of `v`, plus `K` sampled negatives in the
//! context role. Gradients flow through the tanh aggregation into the two
//! group-embedding tables and the per-node kernels. Workers share the
//! parameter tables without locks: each update snapshots the rows it needs,
//! computes, then writes; concurrent lost updates are an accepted part of
//! the contract (the usual asynchronous-SGD bargain), and single-worker
//! runs are exactly deterministic.

use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::groupmap::GroupSetTable;
use crate::model::{ModelParameters, Role};
use crate::sampler::{build_training_walks, window_pairs, LinePairSampler, Method, NegativeSampler, SamplerConfig, WalkCorpus};
use crate::seeds;

/// Optimizer settings.
#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    /// Base learning rate.
    pub alpha: f64,
    /// The rate decays linearly to `alpha * min_alpha_ratio`.
    pub min_alpha_ratio: f64,
    /// Pair budget in epochs; fractions replay a prefix of the walk corpus
    /// (or a partial edge pass for the edge sampler).
    pub epochs: f64,
    pub workers: usize,
    pub seed: u64,
    /// Kernel-gradient guard `G` for [`kernel_lr_scales`].
    pub guard: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { alpha: 0.025, min_alpha_ratio: 1e-4, epochs: 5.0, workers: 1, seed: 0, guard: 5.0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!("alpha must be positive, found {}", self.alpha)));
        }
        if !(self.min_alpha_ratio > 0.0 && self.min_alpha_ratio <= 1.0) {
            return Err(Error::InvalidConfig("min_alpha_ratio must lie in (0, 1]".into()));
        }
        if !(self.epochs >= 0.0) {
            return Err(Error::InvalidConfig("epochs must be >= 0".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        if !(self.guard > 0.0) {
            return Err(Error::InvalidConfig("guard must be positive".into()));
        }
        Ok(())
    }
}

/// One entry of the running-mean loss trace.
#[derive(Clone, Copy, Debug)]
pub struct LossPoint {
    pub pairs: u64,
    pub mean_loss: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Probabilities are clamped away from 0/1 before the log so the loss stays
/// finite even for saturated scores.
const PROB_FLOOR: f64 = 1e-7;

fn safe_ln(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR).ln()
}

/// Per-group-embedding learning rate: shrink when the node's kernel row has
/// grown a large norm, never exceed the base rate.
pub fn adjusted_lr(base_lr: f64, kernel_row: &[f64]) -> f64 {
    let norm = kernel_row.iter().map(|x| x * x).sum::<f64>().sqrt();
    base_lr / norm.max(1.0)
}

/// Global policy over one node's kernel-slot gradients: if the largest
/// magnitude exceeds `guard`, scale every slot down to cap it; if all
/// magnitudes are small (below `0.1 * guard`), double the rate of the
/// largest slot; otherwise leave the rates alone.
pub fn kernel_lr_scales(grads: &[f64], guard: f64, scales: &mut [f64]) {
    debug_assert_eq!(grads.len(), scales.len());
    scales.fill(1.0);
    let mut m = 0.0f64;
    let mut argmax = 0usize;
    for (i, &g) in grads.iter().enumerate() {
        if g.abs() > m {
            m = g.abs();
            argmax = i;
        }
    }
    if m > guard {
        let s = guard / m;
        scales.fill(s);
    } else if m > 0.0 && m < 0.1 * guard {
        scales[argmax] = 2.0;
    }
}

/// Scratch buffers reused across pair updates (one per worker).
pub struct PairWorkspace {
    d: usize,
    n: usize,
    // vertex side
    v_rows: Vec<f64>,
    kernel_v: Vec<f64>,
    f_v: Vec<f64>,
    g_av: Vec<f64>,
    kgrad_v: Vec<f64>,
    scales: Vec<f64>,
    // context side, one block per context (positive first, then negatives)
    ctx_nodes: Vec<NodeId>,
    ctx_coef: Vec<f64>,
    ctx_rows: Vec<f64>,
    ctx_kernels: Vec<f64>,
    ctx_f: Vec<f64>,
    ctx_gac: Vec<f64>,
    ctx_kgrad: Vec<f64>,
}

impl PairWorkspace {
    pub fn new(d: usize, n: usize) -> Self {
        PairWorkspace {
            d,
            n,
            v_rows: Vec::new(),
            kernel_v: Vec::new(),
            f_v: vec![0.0; d],
            g_av: vec![0.0; d],
            kgrad_v: vec![0.0; n],
            scales: vec![0.0; n],
            ctx_nodes: Vec::new(),
            ctx_coef: Vec::new(),
            ctx_rows: Vec::new(),
            ctx_kernels: Vec::new(),
            ctx_f: Vec::new(),
            ctx_gac: Vec::new(),
            ctx_kgrad: Vec::new(),
        }
    }

    fn reset(&mut self, contexts: usize) {
        let (d, n) = (self.d, self.n);
        self.v_rows.clear();
        self.v_rows.resize(n * d, 0.0);
        self.kernel_v.clear();
        self.kernel_v.resize(n, 0.0);
        self.ctx_nodes.clear();
        self.ctx_coef.clear();
        self.ctx_coef.resize(contexts, 0.0);
        self.ctx_rows.clear();
        self.ctx_rows.resize(contexts * n * d, 0.0);
        self.ctx_kernels.clear();
        self.ctx_kernels.resize(contexts * n, 0.0);
        self.ctx_f.clear();
        self.ctx_f.resize(contexts * d, 0.0);
        self.ctx_gac.clear();
        self.ctx_gac.resize(contexts * d, 0.0);
        self.ctx_kgrad.clear();
        self.ctx_kgrad.resize(contexts * n, 0.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Forward pass and (optionally) every gradient for one training pair,
/// written into `ws`. Row contents are copied out of `params` once up
/// front, so concurrent writers cannot tear a single update. Returns the
/// pair loss.
fn compute_pair(
    params: &ModelParameters,
    table: &GroupSetTable,
    u: NodeId,
    v: NodeId,
    negatives: &[NodeId],
    ws: &mut PairWorkspace,
    with_grads: bool,
) -> f64 {
    let (d, n) = (ws.d, ws.n);
    ws.reset(1 + negatives.len());
    ws.ctx_nodes.push(u);
    ws.ctx_nodes.extend_from_slice(negatives);

    // snapshot the vertex side and aggregate
    ws.kernel_v.copy_from_slice(params.kernel_row(v));
    let gset_v = table.set(v);
    for (i, &g) in gset_v.iter().enumerate() {
        ws.v_rows[i * d..(i + 1) * d].copy_from_slice(params.role_row(Role::Vertex, g));
    }
    for j in 0..d {
        let mut acc = 0.0;
        for i in 0..n {
            acc += ws.kernel_v[i] * ws.v_rows[i * d + j];
        }
        ws.f_v[j] = acc.tanh();
    }

    // snapshot each context and aggregate
    for t in 0..ws.ctx_nodes.len() {
        let c = ws.ctx_nodes[t];
        ws.ctx_kernels[t * n..(t + 1) * n].copy_from_slice(params.kernel_row(c));
        let gset_c = table.set(c);
        for (i, &g) in gset_c.iter().enumerate() {
            ws.ctx_rows[(t * n + i) * d..(t * n + i + 1) * d].copy_from_slice(params.role_row(Role::Context, g));
        }
        for j in 0..d {
            let mut acc = 0.0;
            for i in 0..n {
                acc += ws.ctx_kernels[t * n + i] * ws.ctx_rows[(t * n + i) * d + j];
            }
            ws.ctx_f[t * d + j] = acc.tanh();
        }
    }

    // scores, loss, and the dL/dx coefficients
    let mut loss = 0.0;
    for t in 0..ws.ctx_nodes.len() {
        let x = dot(&ws.ctx_f[t * d..(t + 1) * d], &ws.f_v);
        let s = sigmoid(x);
        if t == 0 {
            loss -= safe_ln(s);
            ws.ctx_coef[t] = -(1.0 - s);
        } else {
            loss -= safe_ln(1.0 - s);
            ws.ctx_coef[t] = s;
        }
    }
    if !with_grads {
        return loss;
    }

    // dL/da_v = (sum_t coef_t * f_ctx_t) ⊙ (1 - f_v^2)
    for j in 0..d {
        let mut acc = 0.0;
        for t in 0..ws.ctx_nodes.len() {
            acc += ws.ctx_coef[t] * ws.ctx_f[t * d + j];
        }
        ws.g_av[j] = acc * (1.0 - ws.f_v[j] * ws.f_v[j]);
    }
    // kernel slot gradients on the vertex side: dL/dλ_i = g_av · row_i
    for i in 0..n {
        ws.kgrad_v[i] = dot(&ws.g_av, &ws.v_rows[i * d..(i + 1) * d]);
    }
    // context sides: dL/da_c = coef_t * f_v ⊙ (1 - f_c^2), then kernel dots
    for t in 0..ws.ctx_nodes.len() {
        for j in 0..d {
            let fc = ws.ctx_f[t * d + j];
            ws.ctx_gac[t * d + j] = ws.ctx_coef[t] * ws.f_v[j] * (1.0 - fc * fc);
        }
        for i in 0..n {
            ws.ctx_kgrad[t * n + i] = dot(
                &ws.ctx_gac[t * d..(t + 1) * d],
                &ws.ctx_rows[(t * n + i) * d..(t * n + i + 1) * d],
            );
        }
    }
    loss
}

/// The loss of one pair under the current parameters.
pub fn sgns_loss(
    params: &ModelParameters,
    table: &GroupSetTable,
    u: NodeId,
    v: NodeId,
    negatives: &[NodeId],
) -> f64 {
    let mut ws = PairWorkspace::new(params.d(), params.set_size());
    compute_pair(params, table, u, v, negatives, &mut ws, false)
}

/// Raw accumulated gradients of one pair, keyed by row; used by the
/// finite-difference correctness gate.
#[derive(Debug, Default)]
pub struct PairGradients {
    /// `(group id, dL/d vertex_row)`, ascending group id.
    pub vertex_rows: Vec<(u32, Vec<f64>)>,
    /// `(group id, dL/d context_row)`, ascending group id.
    pub context_rows: Vec<(u32, Vec<f64>)>,
    /// `(node id, dL/d kernel_row)`, ascending node id; vertex- and
    /// context-role contributions are summed when a node plays both roles.
    pub kernel_rows: Vec<(u32, Vec<f64>)>,
}

fn accumulate(acc: &mut Vec<(u32, Vec<f64>)>, key: u32, start: usize, grad: &[f64]) {
    match acc.binary_search_by_key(&key, |e| e.0) {
        Ok(pos) => {
            for (slot, &g) in acc[pos].1[start..].iter_mut().zip(grad) {
                *slot += g;
            }
        }
        Err(pos) => {
            let mut row = vec![0.0; start + grad.len()];
            row[start..].copy_from_slice(grad);
            acc.insert(pos, (key, row));
        }
    }
}

/// Compute the pair loss and all parameter gradients without applying them.
pub fn pair_gradients(
    params: &ModelParameters,
    table: &GroupSetTable,
    u: NodeId,
    v: NodeId,
    negatives: &[NodeId],
) -> (f64, PairGradients) {
    let (d, n) = (params.d(), params.set_size());
    let mut ws = PairWorkspace::new(d, n);
    let loss = compute_pair(params, table, u, v, negatives, &mut ws, true);

    let mut grads = PairGradients::default();
    let gset_v = table.set(v);
    let mut row = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            row[j] = ws.kernel_v[i] * ws.g_av[j];
        }
        accumulate(&mut grads.vertex_rows, gset_v[i], 0, &row);
    }
    accumulate(&mut grads.kernel_rows, v, 0, &ws.kgrad_v);
    for t in 0..ws.ctx_nodes.len() {
        let c = ws.ctx_nodes[t];
        let gset_c = table.set(c);
        for i in 0..n {
            for j in 0..d {
                row[j] = ws.ctx_kernels[t * n + i] * ws.ctx_gac[t * d + j];
            }
            accumulate(&mut grads.context_rows, gset_c[i], 0, &row);
        }
        accumulate(&mut grads.kernel_rows, c, 0, &ws.ctx_kgrad[t * n..(t + 1) * n]);
    }
    (loss, grads)
}

/// Apply one SGD step for the pair `(u, v)` with the given negatives.
///
/// Write order: kernels of `v`, `u`, then each negative (each scaled by the
/// global kernel policy); vertex group rows of `v`; context group rows of
/// `u` and the negatives (rows scaled by the owning node's kernel-norm
/// adjustment). All gradients come from one pre-update snapshot. Returns
/// the pair loss.
pub fn train_pair(
    params: &mut ModelParameters,
    table: &GroupSetTable,
    u: NodeId,
    v: NodeId,
    negatives: &[NodeId],
    lr: f64,
    guard: f64,
    ws: &mut PairWorkspace,
) -> f64 {
    let (d, n) = (ws.d, ws.n);
    let loss = compute_pair(params, table, u, v, negatives, ws, true);

    // (a) kernel rows, vertex node first, then contexts in pair order
    kernel_lr_scales(&ws.kgrad_v, guard, &mut ws.scales);
    {
        let kernels = params.kernel_row_mut(v);
        for i in 0..n {
            kernels[i] -= lr * ws.scales[i] * ws.kgrad_v[i];
        }
    }
    for t in 0..ws.ctx_nodes.len() {
        let kgrad = &ws.ctx_kgrad[t * n..(t + 1) * n];
        kernel_lr_scales(kgrad, guard, &mut ws.scales);
        let kernels = params.kernel_row_mut(ws.ctx_nodes[t]);
        for i in 0..n {
            kernels[i] -= lr * ws.scales[i] * kgrad[i];
        }
    }

    // (b) vertex group rows of v, rate shrunk by v's (snapshot) kernel norm
    let gset_v = table.set(v);
    let lr_v = adjusted_lr(lr, &ws.kernel_v);
    for i in 0..n {
        let lambda = ws.kernel_v[i];
        if lambda == 0.0 {
            continue;
        }
        let row = params.role_row_mut(Role::Vertex, gset_v[i]);
        for j in 0..d {
            row[j] -= lr_v * lambda * ws.g_av[j];
        }
    }

    // (c) context group rows of u and each negative
    for t in 0..ws.ctx_nodes.len() {
        let c = ws.ctx_nodes[t];
        let gset_c = table.set(c);
        let lr_c = adjusted_lr(lr, &ws.ctx_kernels[t * n..(t + 1) * n]);
        for i in 0..n {
            let lambda = ws.ctx_kernels[t * n + i];
            if lambda == 0.0 {
                continue;
            }
            let row = params.role_row_mut(Role::Context, gset_c[i]);
            for j in 0..d {
                row[j] -= lr_c * lambda * ws.ctx_gac[t * d + j];
            }
        }
    }
    loss
}

/// Shared mutable parameter cell for lock-free training.
///
/// Workers write concurrently without synchronization; individual f64
/// writes are atomic on the supported targets and lost updates are
/// tolerated by the training contract. Do not read the final model until
/// all workers have been joined.
struct Hogwild(Arc<UnsafeCell<ModelParameters>>);

unsafe impl Send for Hogwild {}
unsafe impl Sync for Hogwild {}

impl Clone for Hogwild {
    fn clone(&self) -> Self {
        Hogwild(Arc::clone(&self.0))
    }
}

impl Hogwild {
    fn new(params: ModelParameters) -> Self {
        Hogwild(Arc::new(UnsafeCell::new(params)))
    }

    #[allow(clippy::mut_from_ref)]
    fn get_mut(&self) -> &mut ModelParameters {
        unsafe { &mut *self.0.get() }
    }

    fn into_inner(self) -> ModelParameters {
        match Arc::try_unwrap(self.0) {
            Ok(cell) => cell.into_inner(),
            Err(_) => unreachable!("all workers joined before unwrap"),
        }
    }
}

/// Add to an f64 accumulator stored as atomic bits.
fn atomic_f64_add(cell: &AtomicU64, x: f64) {
    let mut cur = cell.load(Ordering::Relaxed);
    loop {
        let next = (f64::from_bits(cur) + x).to_bits();
        match cell.compare_exchange_weak(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => return,
            Err(seen) => cur = seen,
        }
    }
}

const TRACE_EVERY: u64 = 100_000;
const SCAN_EVERY: u64 = 1_000_000;

/// How one worker's share of the pair budget is produced.
enum WorkPlan {
    Line { sampler: LinePairSampler, draws: u64 },
    Walks { corpus: WalkCorpus, full_epochs: u64, prefix_walks: usize },
}

struct SharedProgress {
    pairs: AtomicU64,
    loss_bits: AtomicU64,
    abort: AtomicBool,
    trace: Mutex<Vec<LossPoint>>,
    failure: Mutex<Option<Error>>,
}

/// Train `params` on pairs from the configured sampler. Returns the final
/// parameters and the running-mean loss trace (one point per 10^5 pairs).
pub fn train(
    g: &Graph,
    table: &GroupSetTable,
    params: ModelParameters,
    scfg: &SamplerConfig,
    tcfg: &TrainConfig,
) -> Result<(ModelParameters, Vec<LossPoint>)> {
    scfg.validate()?;
    tcfg.validate()?;
    if table.node_count() != g.node_count() {
        return Err(Error::InvalidInput(format!(
            "group-set table covers {} nodes, graph has {}",
            table.node_count(),
            g.node_count()
        )));
    }
    if params.node_count() != g.node_count() || params.set_size() != table.set_size() {
        return Err(Error::InvalidInput("model shape does not match graph and group-set table".into()));
    }
    if table.group_count() > params.group_count() {
        return Err(Error::InvalidInput(format!(
            "group-set table references {} groups, model has {}",
            table.group_count(),
            params.group_count()
        )));
    }

    let plan = match scfg.method {
        Method::Line2 => {
            let sampler = LinePairSampler::new(g)?;
            let draws = (tcfg.epochs * sampler.epoch_len() as f64).round() as u64;
            WorkPlan::Line { sampler, draws }
        }
        Method::Deepwalk | Method::Node2vec => {
            let corpus = build_training_walks(g, scfg, tcfg.seed)?;
            let full_epochs = tcfg.epochs.floor() as u64;
            let prefix_walks = ((tcfg.epochs - tcfg.epochs.floor()) * corpus.walks.len() as f64).round() as usize;
            WorkPlan::Walks { corpus, full_epochs, prefix_walks }
        }
    };
    let total: u64 = match &plan {
        WorkPlan::Line { draws, .. } => *draws,
        WorkPlan::Walks { corpus, full_epochs, prefix_walks } => {
            full_epochs * corpus.pairs_per_epoch() + corpus.pairs_in_prefix(*prefix_walks)
        }
    };
    if total == 0 {
        return Ok((params, Vec::new()));
    }

    let negatives = NegativeSampler::new(g, scfg.negative_exponent)?;
    let hog = Hogwild::new(params);
    let progress = SharedProgress {
        pairs: AtomicU64::new(0),
        loss_bits: AtomicU64::new(0f64.to_bits()),
        abort: AtomicBool::new(false),
        trace: Mutex::new(Vec::new()),
        failure: Mutex::new(None),
    };

    std::thread::scope(|scope| {
        for wid in 0..tcfg.workers {
            let hog = hog.clone();
            let plan = &plan;
            let negatives = &negatives;
            let progress = &progress;
            scope.spawn(move || {
                let outcome = run_worker(wid, tcfg, scfg, table, hog, plan, negatives, progress, total);
                if let Err(e) = outcome {
                    let mut failure = progress.failure.lock().unwrap();
                    if failure.is_none() {
                        *failure = Some(e);
                    }
                    progress.abort.store(true, Ordering::Relaxed);
                }
            });
        }
    });

    if let Some(e) = progress.failure.lock().unwrap().take() {
        return Err(e);
    }
    let params = hog.into_inner();
    if let Some(tbl) = params.find_non_finite() {
        return Err(Error::Diverged(format!("non-finite value in {tbl} after training")));
    }
    let mut trace = progress.trace.into_inner().unwrap();
    trace.sort_by_key(|p| p.pairs);
    Ok((params, trace))
}

#[allow(clippy::too_many_arguments)]
fn run_worker(
    wid: usize,
    tcfg: &TrainConfig,
    scfg: &SamplerConfig,
    table: &GroupSetTable,
    hog: Hogwild,
    plan: &WorkPlan,
    negatives: &NegativeSampler,
    progress: &SharedProgress,
    total: u64,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(tcfg.seed, seeds::SALT_WORKER + wid as u64));
    let (d, n) = {
        let p = hog.get_mut();
        (p.d(), p.set_size())
    };
    let mut ws = PairWorkspace::new(d, n);
    let mut negs: Vec<NodeId> = Vec::with_capacity(scfg.negatives);
    let mut local: u64 = 0;

    let mut step = |u: NodeId, v: NodeId, rng: &mut ChaCha8Rng, ws: &mut PairWorkspace, local: &mut u64| -> Result<bool> {
        if progress.abort.load(Ordering::Relaxed) {
            return Ok(false);
        }
        negs.clear();
        for _ in 0..scfg.negatives {
            // avoid sampling the positive context as its own negative
            let mut pick = negatives.sample(rng);
            for _ in 0..10 {
                if pick != u {
                    break;
                }
                pick = negatives.sample(rng);
            }
            negs.push(pick);
        }
        let done_before = progress.pairs.fetch_add(1, Ordering::Relaxed);
        let lr = tcfg.alpha * (1.0 - done_before as f64 / total as f64).max(tcfg.min_alpha_ratio);
        let loss = train_pair(hog.get_mut(), table, u, v, &negs, lr, tcfg.guard, ws);
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("pair ({u}, {v}) produced a non-finite loss")));
        }
        atomic_f64_add(&progress.loss_bits, loss);
        let done = done_before + 1;
        if done % TRACE_EVERY == 0 {
            let mean = f64::from_bits(progress.loss_bits.load(Ordering::Relaxed)) / done as f64;
            eprintln!("pairs={done} loss={mean:.6}");
            progress.trace.lock().unwrap().push(LossPoint { pairs: done, mean_loss: mean });
        }
        *local += 1;
        if *local % SCAN_EVERY == 0 {
            if let Some(tbl) = hog.get_mut().find_non_finite() {
                return Err(Error::Diverged(format!("non-finite value in {tbl} near pair ({u}, {v})")));
            }
        }
        Ok(true)
    };

    match plan {
        WorkPlan::Line { sampler, draws } => {
            let share = draws / tcfg.workers as u64 + u64::from((wid as u64) < draws % tcfg.workers as u64);
            for _ in 0..share {
                let (u, v) = sampler.sample(&mut rng);
                if !step(u, v, &mut rng, &mut ws, &mut local)? {
                    break;
                }
            }
        }
        WorkPlan::Walks { corpus, full_epochs, prefix_walks } => {
            'outer: for epoch in 0..=*full_epochs {
                let limit = if epoch == *full_epochs { *prefix_walks } else { corpus.walks.len() };
                for (i, walk) in corpus.walks[..limit].iter().enumerate() {
                    if i % tcfg.workers != wid {
                        continue;
                    }
                    for (u, v) in window_pairs(walk, corpus.window) {
                        if !step(u, v, &mut rng, &mut ws, &mut local)? {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
