//! End-to-end driver: load a graph, hold out evaluation edges, partition,
//! build group sets, train, export, and score — writing every artifact to
//! one output directory plus a JSON-lines step report.
//!
//! All stages draw independent RNG streams from the single run seed, so a
//! config (with one worker) pins every artifact byte for byte. With
//! `resume`, a step whose artifact already exists is loaded back instead
//! of recomputed.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::budget::{matched_group_count, report_budget};
use crate::error::{Error, Result};
use crate::eval::classify::{evaluate, ClassifyConfig, LabelSet};
use crate::eval::{
    link_prediction_auc, link_prediction_mrr, split_edges, Embeddings, EvalSplit, ScoreOp,
};
use crate::graph::Graph;
use crate::groupmap::{build_group_sets, GroupSetTable, WalkConfig};
use crate::model::ModelParameters;
use crate::partition::{partition_label_propagation, partition_quality, Partition};
use crate::sampler::SamplerConfig;
use crate::trainer::{train, TrainConfig};

/// Everything a run needs, loadable from TOML. Any omitted field takes its
/// default, and unknown fields are rejected so typos surface early.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Input edge-list path.
    pub edges: String,
    pub directed: bool,
    pub output_dir: String,
    /// Run-level seed; every stage derives its own stream from it.
    pub seed: u64,
    /// Training worker threads.
    pub workers: usize,
    pub partition: PartitionSection,
    pub groups: GroupSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            edges: String::new(),
            directed: false,
            output_dir: "out".into(),
            seed: 0,
            workers: 1,
            partition: PartitionSection::default(),
            groups: GroupSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    /// Group count; 0 derives it from the parameter budget so the model
    /// matches a `baseline_dim`-dimensional lookup table.
    pub count: usize,
    pub epsilon: f64,
    pub rounds: usize,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection { count: 0, epsilon: 0.05, rounds: 25 }
    }
}

/// Group-set construction (the walk-and-rank stage).
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupSection {
    pub walks_per_vertex: usize,
    pub walk_length: usize,
    pub set_size: usize,
}

impl Default for GroupSection {
    fn default() -> Self {
        GroupSection { walks_per_vertex: 100, walk_length: 5, set_size: 5 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub dim: usize,
    /// Pair source: "line2", "deepwalk", or "node2vec".
    pub method: String,
    pub epochs: f64,
    pub alpha: f64,
    pub negatives: usize,
    pub negative_exponent: f64,
    pub window: usize,
    pub walk_length: usize,
    pub walks_per_vertex: usize,
    pub p: f64,
    pub q: f64,
    pub guard: f64,
    /// Reference lookup-table dimension for the budget report (and for the
    /// automatic group count).
    pub baseline_dim: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            dim: 8,
            method: "line2".into(),
            epochs: 5.0,
            alpha: 0.025,
            negatives: 5,
            negative_exponent: 0.75,
            window: 5,
            walk_length: 40,
            walks_per_vertex: 5,
            p: 1.0,
            q: 1.0,
            guard: 5.0,
            baseline_dim: 128,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Fraction of edges held out for link prediction; 0 skips it.
    pub holdout: f64,
    pub score: String,
    /// Ranking candidates per held-out edge; 0 skips the MRR.
    pub mrr_candidates: usize,
    /// Node-label file for classification; empty skips it.
    pub labels: String,
    pub classify_train_ratio: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            holdout: 0.0,
            score: "dot".into(),
            mrr_candidates: 0,
            labels: String::new(),
            classify_train_ratio: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.edges.is_empty() {
            return Err(Error::InvalidConfig("an input edge-list path is required".into()));
        }
        if self.output_dir.is_empty() {
            return Err(Error::InvalidConfig("an output directory is required".into()));
        }
        self.sampler_config()?.validate()?;
        self.train_config().validate()?;
        Ok(())
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        Ok(SamplerConfig {
            method: self.train.method.parse()?,
            window: self.train.window,
            walk_length: self.train.walk_length,
            walks_per_vertex: self.train.walks_per_vertex,
            p: self.train.p,
            q: self.train.q,
            negatives: self.train.negatives,
            negative_exponent: self.train.negative_exponent,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            alpha: self.train.alpha,
            epochs: self.train.epochs,
            workers: self.workers,
            seed: self.seed,
            guard: self.train.guard,
            ..TrainConfig::default()
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            walks_per_vertex: self.groups.walks_per_vertex,
            walk_length: self.groups.walk_length,
            set_size: self.groups.set_size,
            seed: self.seed,
        }
    }
}

/// Parse a TOML config file.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<PipelineConfig> {
    let text = fs::read_to_string(&path)?;
    toml::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.as_ref().display())))
}

/// Headline numbers of a finished run, also persisted in the step report.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineOutcome {
    pub node_count: usize,
    pub group_count: usize,
    pub final_mean_loss: Option<f64>,
    pub auc: Option<f64>,
    pub mrr: Option<f64>,
    pub micro_f1: Option<f64>,
    pub macro_f1: Option<f64>,
    pub embeddings_path: PathBuf,
}

struct Report {
    out: BufWriter<File>,
}

impl Report {
    fn create(path: &Path) -> Result<Report> {
        Ok(Report { out: BufWriter::new(File::create(path)?) })
    }

    fn step(&mut self, name: &str, started: Instant, extra: serde_json::Value) -> Result<()> {
        let mut map = serde_json::Map::new();
        map.insert("step".into(), json!(name));
        map.insert("wall_time_s".into(), json!(started.elapsed().as_secs_f64()));
        if let serde_json::Value::Object(add) = extra {
            map.extend(add);
        }
        let line = serde_json::Value::Object(map);
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        eprintln!("{line}");
        Ok(())
    }
}

fn in_step<T>(step: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| e.in_step(step))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        Error::InvalidInput(format!("{}: {e}", path.display()))
    })?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Run every configured stage. With `resume`, stages whose artifacts exist
/// load them instead of recomputing (training included, so a fully
/// populated directory costs zero training pairs).
pub fn run_pipeline(cfg: &PipelineConfig, resume: bool) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let dir = Path::new(&cfg.output_dir);
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("config_used.toml"),
        toml::to_string_pretty(cfg).map_err(|e| Error::InvalidConfig(e.to_string()))?,
    )?;
    let mut report = Report::create(&dir.join("report.jsonl"))?;

    // load (with a binary cache for fast resumes on big edge lists)
    let t = Instant::now();
    let cache_path = dir.join("graph.bin");
    let cached = resume && cache_path.exists();
    let mut g = in_step("load", || {
        if cached {
            Graph::load_cache(open(&cache_path)?)
        } else {
            let g = Graph::load_edge_list(open(Path::new(&cfg.edges))?, cfg.directed)?;
            g.save_cache(create(&cache_path)?)?;
            Ok(g)
        }
    })?;
    report.step(
        "load",
        t,
        json!({"nodes": g.node_count(), "entries": g.entry_count(), "cached": cached}),
    )?;

    // split
    let mut split: Option<EvalSplit> = None;
    if cfg.eval.holdout > 0.0 {
        let t = Instant::now();
        let split_path = dir.join("split.json");
        let reused = resume && split_path.exists();
        let s = in_step("split", || {
            if reused {
                EvalSplit::load(&split_path)
            } else {
                let (_, s) = split_edges(&g, cfg.eval.holdout, cfg.seed)?;
                s.save(&split_path)?;
                Ok(s)
            }
        })?;
        g = in_step("split", || s.train_graph())?;
        report.step(
            "split",
            t,
            json!({"test_pos": s.test_pos.len(), "train_edges": s.train_edges.len(), "cached": reused}),
        )?;
        split = Some(s);
    }

    // budget (reported before any training happens)
    let t = Instant::now();
    let group_count = if cfg.partition.count == 0 {
        matched_group_count(g.node_count(), cfg.train.dim, cfg.groups.set_size, cfg.train.baseline_dim)
    } else {
        cfg.partition.count
    };
    // A node can't rank more groups than exist; small partitions shrink the
    // set instead of failing four stages into the run.
    let set_size = cfg.groups.set_size.min(group_count);
    if set_size < cfg.groups.set_size {
        eprintln!(
            "warning: set_size {} exceeds the {group_count} available groups; using {set_size}",
            cfg.groups.set_size
        );
    }
    let budget = report_budget(
        g.node_count(),
        group_count,
        cfg.train.dim,
        set_size,
        cfg.train.baseline_dim,
    );
    report.step("budget", t, serde_json::to_value(budget)?)?;

    // partition
    let t = Instant::now();
    let part_path = dir.join("partition.txt");
    let reused = resume && part_path.exists();
    let partition = in_step("partition", || {
        if reused {
            Partition::load(open(&part_path)?, g.node_count())
        } else {
            let p = partition_label_propagation(
                &g,
                group_count,
                cfg.partition.epsilon,
                cfg.partition.rounds,
                cfg.seed,
            )?;
            p.save(create(&part_path)?)?;
            Ok(p)
        }
    })?;
    let (cut, imbalance) = partition_quality(&g, &partition)?;
    report.step(
        "partition",
        t,
        json!({"groups": partition.group_count(), "cut": cut, "imbalance": imbalance, "cached": reused}),
    )?;

    // group sets
    let t = Instant::now();
    let gsets_path = dir.join("group_sets.txt");
    let reused = resume && gsets_path.exists();
    let table = in_step("groupmap", || {
        if reused {
            GroupSetTable::load(open(&gsets_path)?)
        } else {
            let wcfg = WalkConfig { set_size, ..cfg.walk_config() };
            let tbl = build_group_sets(&g, &partition, &wcfg)?;
            tbl.save(create(&gsets_path)?)?;
            Ok(tbl)
        }
    })?;
    report.step("groupmap", t, json!({"set_size": table.set_size(), "cached": reused}))?;

    // train + export
    let emb_path = dir.join("embeddings.txt");
    let mut final_mean_loss = None;
    let embeddings = if resume && emb_path.exists() {
        let t = Instant::now();
        let emb = in_step("train", || Embeddings::load(&emb_path))?;
        report.step("train", t, json!({"cached": true}))?;
        report.step("export", t, json!({"cached": true}))?;
        emb
    } else {
        let t = Instant::now();
        let scfg = cfg.sampler_config()?;
        let tcfg = cfg.train_config();
        let params = in_step("train", || {
            let mut params = ModelParameters::init(
                partition.group_count(),
                g.node_count(),
                cfg.train.dim,
                table.set_size(),
                cfg.seed,
            );
            params.zero_padding_slots(&table);
            let (params, trace) = train(&g, &table, params, &scfg, &tcfg)?;
            final_mean_loss = trace.last().map(|pt| pt.mean_loss);
            Ok(params)
        })?;
        report.step("train", t, json!({"final_mean_loss": final_mean_loss}))?;
        let t = Instant::now();
        in_step("export", || params.write_embeddings(&table, create(&emb_path)?))?;
        report.step("export", t, json!({"path": emb_path.display().to_string()}))?;
        Embeddings::from_model(&params, &table)
    };

    // link prediction
    let mut auc = None;
    let mut mrr = None;
    if let Some(split) = &split {
        let t = Instant::now();
        let op: ScoreOp = in_step("eval-lp", || cfg.eval.score.parse())?;
        auc = Some(in_step("eval-lp", || link_prediction_auc(&embeddings, split, op, cfg.seed))?);
        if cfg.eval.mrr_candidates > 0 {
            mrr = Some(in_step("eval-lp", || {
                link_prediction_mrr(&embeddings, split, op, cfg.eval.mrr_candidates, cfg.seed)
            })?);
        }
        report.step("eval-lp", t, json!({"op": cfg.eval.score, "auc": auc, "mrr": mrr}))?;
    }

    // classification
    let mut micro_f1 = None;
    let mut macro_f1 = None;
    if !cfg.eval.labels.is_empty() {
        let t = Instant::now();
        let r = in_step("eval-clf", || {
            let labels = LabelSet::load(&cfg.eval.labels, embeddings.node_count())?;
            let ccfg = ClassifyConfig {
                train_ratio: cfg.eval.classify_train_ratio,
                seed: cfg.seed,
                ..ClassifyConfig::default()
            };
            evaluate(&embeddings, &labels, &ccfg)
        })?;
        micro_f1 = Some(r.micro_f1);
        macro_f1 = Some(r.macro_f1);
        report.step("eval-clf", t, serde_json::to_value(&r)?)?;
    }

    Ok(PipelineOutcome {
        node_count: g.node_count(),
        group_count: partition.group_count(),
        final_mean_loss,
        auc,
        mrr,
        micro_f1,
        macro_f1,
        embeddings_path: emb_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_two_cliques(path: &Path, size: usize) {
        let mut body = String::new();
        for base in [0, size] {
            for i in base..base + size {
                for j in (i + 1)..base + size {
                    body.push_str(&format!("{i} {j}\n"));
                }
            }
        }
        fs::write(path, body).unwrap();
    }

    fn clique_config(dir: &Path, edges: &Path) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.edges = edges.display().to_string();
        cfg.output_dir = dir.join("out").display().to_string();
        cfg.seed = 42;
        cfg.partition.count = 2;
        cfg.groups = GroupSection { walks_per_vertex: 20, walk_length: 4, set_size: 2 };
        cfg.train.dim = 4;
        cfg.train.epochs = 120.0;
        cfg.eval.holdout = 0.25;
        cfg.eval.mrr_candidates = 3;
        cfg
    }

    #[test]
    fn two_clique_run_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let edges = dir.path().join("cliques.edges");
        write_two_cliques(&edges, 8);
        let cfg = clique_config(dir.path(), &edges);
        let outcome = run_pipeline(&cfg, false).unwrap();

        assert_eq!(outcome.node_count, 16);
        assert_eq!(outcome.group_count, 2);
        let auc = outcome.auc.unwrap();
        assert!(auc > 0.9, "two separable cliques should rank cleanly, got {auc}");
        assert!(outcome.mrr.unwrap() > 0.0);

        let out = Path::new(&cfg.output_dir);
        for artifact in [
            "config_used.toml",
            "report.jsonl",
            "graph.bin",
            "split.json",
            "partition.txt",
            "group_sets.txt",
            "embeddings.txt",
        ] {
            assert!(out.join(artifact).exists(), "{artifact} missing");
        }
        let report = fs::read_to_string(out.join("report.jsonl")).unwrap();
        let steps: Vec<String> = report
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["step"].as_str().unwrap().into())
            .collect();
        assert_eq!(steps, ["load", "split", "budget", "partition", "groupmap", "train", "export", "eval-lp"]);
    }

    #[test]
    fn oversized_set_size_shrinks_to_group_count() {
        let dir = tempfile::tempdir().unwrap();
        let edges = dir.path().join("cliques.edges");
        write_two_cliques(&edges, 6);
        let mut cfg = clique_config(dir.path(), &edges);
        cfg.groups.set_size = 5; // only 2 groups exist
        cfg.train.epochs = 10.0;
        run_pipeline(&cfg, false).unwrap();

        let gsets = fs::read_to_string(Path::new(&cfg.output_dir).join("group_sets.txt")).unwrap();
        for line in gsets.lines() {
            assert_eq!(line.split_whitespace().count(), 2, "clamped set per node: {line}");
        }
    }

    #[test]
    fn resume_reuses_artifacts_untouched() {
        let dir = tempfile::tempdir().unwrap();
        let edges = dir.path().join("cliques.edges");
        write_two_cliques(&edges, 6);
        let mut cfg = clique_config(dir.path(), &edges);
        cfg.train.epochs = 10.0;
        run_pipeline(&cfg, false).unwrap();

        let out = Path::new(&cfg.output_dir);
        let emb_before = fs::read(out.join("embeddings.txt")).unwrap();
        let part_before = fs::read(out.join("partition.txt")).unwrap();

        // a resumed run with a different seed must not disturb anything
        cfg.seed = 777;
        let outcome = run_pipeline(&cfg, true).unwrap();
        assert_eq!(fs::read(out.join("embeddings.txt")).unwrap(), emb_before);
        assert_eq!(fs::read(out.join("partition.txt")).unwrap(), part_before);
        assert!(outcome.final_mean_loss.is_none(), "no training happened");
        let report = fs::read_to_string(out.join("report.jsonl")).unwrap();
        assert!(report.contains("\"cached\":true"), "report should mark reused steps");
    }

    #[test]
    fn missing_input_names_the_path_and_step() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.edges = dir.path().join("nope.edges").display().to_string();
        cfg.output_dir = dir.path().join("out").display().to_string();
        match run_pipeline(&cfg, false) {
            Err(Error::Step { step: "load", source }) => {
                assert!(source.to_string().contains("nope.edges"), "{source}");
            }
            other => panic!("expected a load-step failure, got {other:?}"),
        }
    }

    #[test]
    fn config_parses_with_partial_sections_and_rejects_typos() {
        let cfg: PipelineConfig =
            toml::from_str("edges = \"g.edges\"\n[train]\ndim = 16\n").unwrap();
        assert_eq!(cfg.train.dim, 16);
        assert_eq!(cfg.train.window, 5);
        assert_eq!(cfg.partition.epsilon, 0.05);
        assert_eq!(cfg.groups.set_size, 5);
        assert!(toml::from_str::<PipelineConfig>("edgs = \"g.edges\"\n").is_err());
        assert!(toml::from_str::<PipelineConfig>("[train]\ndims = 16\n").is_err());
    }

    #[test]
    fn validation_requires_paths() {
        let cfg = PipelineConfig::default();
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }
}
