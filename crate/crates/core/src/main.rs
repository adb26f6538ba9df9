//! Command-line front end. Flag precedence everywhere: explicit flags beat
//! the `--config` file, which beats built-in defaults. Subcommands print a
//! single JSON object to standard out; progress and warnings go to
//! standard error.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use cosine::budget::{matched_group_count, report_budget};
use cosine::eval::classify::{evaluate, ClassifyConfig, LabelSet};
use cosine::eval::{link_prediction_auc, link_prediction_mrr, Embeddings, EvalSplit, ScoreOp};
use cosine::graph::Graph;
use cosine::groupmap::{build_group_sets, GroupSetTable, WalkConfig};
use cosine::model::ModelParameters;
use cosine::partition::{partition_label_propagation, partition_quality, Partition};
use cosine::pipeline::{load_config, run_pipeline, PipelineConfig};
use cosine::trainer::train;
use cosine::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cosine",
    version,
    about = "Graph embeddings from shared group vectors with per-node mixing weights"
)]
struct Cli {
    /// Run seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Training worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// TOML config supplying defaults for any flag left unset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a graph into balanced groups by label propagation.
    Partition {
        /// Edge-list file ("u v [w]" per line).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Group count (0 derives it from the parameter budget).
        #[arg(long)]
        groups: Option<usize>,
        /// Allowed imbalance over the ideal group size.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Maximum propagation rounds.
        #[arg(long)]
        rounds: Option<usize>,
        /// Partition file to write (one group id per line).
        #[arg(long)]
        output: PathBuf,
    },
    /// Rank each node's most-visited groups by short random walks.
    Groupmap {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Partition file from the partition step.
        #[arg(long)]
        partition: PathBuf,
        /// Walks started per vertex.
        #[arg(long)]
        walks: Option<usize>,
        /// Steps per walk.
        #[arg(long)]
        length: Option<usize>,
        /// Groups kept per node.
        #[arg(long)]
        set_size: Option<usize>,
        /// Group-set file to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the shared-group model and export node embeddings.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Group-set file from the groupmap step.
        #[arg(long)]
        gsets: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        /// Pair source: line2, deepwalk, or node2vec.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        epochs: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        walk_length: Option<usize>,
        #[arg(long)]
        walks_per_vertex: Option<usize>,
        /// node2vec return parameter.
        #[arg(long)]
        p: Option<f64>,
        /// node2vec in-out parameter.
        #[arg(long)]
        q: Option<f64>,
        /// Embedding text file to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a link-prediction split with trained embeddings.
    EvalLp {
        #[arg(long)]
        emb: PathBuf,
        /// Split file written by the pipeline's holdout step.
        #[arg(long)]
        split: PathBuf,
        /// Score function: dot, l1, or l2.
        #[arg(long)]
        op: Option<String>,
        /// Candidates per ranking query (0 skips the MRR).
        #[arg(long)]
        mrr_candidates: Option<usize>,
    },
    /// Classify labeled nodes with one-vs-rest logistic regression.
    EvalClf {
        #[arg(long)]
        emb: PathBuf,
        /// Label file ("node_id label_id" per line).
        #[arg(long)]
        labels: PathBuf,
        /// Fraction of labeled nodes used for training.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Run every stage into one output directory.
    Pipeline {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Reuse artifacts that already exist in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Compare the shared-group parameter count against a lookup table.
    Budget {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        groups: usize,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        set_size: Option<usize>,
        /// Lookup-table dimension to compare against.
        #[arg(long)]
        baseline_dim: Option<usize>,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        Error::InvalidInput(format!("{}: {e}", path.display()))
    })?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn required_input(flag: Option<PathBuf>, cfg: &PipelineConfig) -> Result<PathBuf> {
    match flag {
        Some(p) => Ok(p),
        None if !cfg.edges.is_empty() => Ok(PathBuf::from(&cfg.edges)),
        None => Err(Error::InvalidConfig("--input (or 'edges' in the config file) is required".into())),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }

    match cli.command {
        Command::Partition { input, groups, epsilon, rounds, output } => {
            let input = required_input(input, &cfg)?;
            let g = Graph::load_edge_list(open(&input)?, cfg.directed)?;
            let k = match groups.unwrap_or(cfg.partition.count) {
                0 => matched_group_count(g.node_count(), cfg.train.dim, cfg.groups.set_size, cfg.train.baseline_dim),
                k => k,
            };
            let p = partition_label_propagation(
                &g,
                k,
                epsilon.unwrap_or(cfg.partition.epsilon),
                rounds.unwrap_or(cfg.partition.rounds),
                cfg.seed,
            )?;
            p.save(create(&output)?)?;
            let (cut, imbalance) = partition_quality(&g, &p)?;
            println!("{}", json!({"groups": p.group_count(), "cut": cut, "imbalance": imbalance}));
        }
        Command::Groupmap { input, partition, walks, length, set_size, output } => {
            let input = required_input(input, &cfg)?;
            let g = Graph::load_edge_list(open(&input)?, cfg.directed)?;
            let p = Partition::load(open(&partition)?, g.node_count())?;
            let requested = set_size.unwrap_or(cfg.groups.set_size);
            let set_size = requested.min(p.group_count());
            if set_size < requested {
                eprintln!(
                    "warning: set_size {requested} exceeds the {} available groups; using {set_size}",
                    p.group_count()
                );
            }
            let wcfg = WalkConfig {
                walks_per_vertex: walks.unwrap_or(cfg.groups.walks_per_vertex),
                walk_length: length.unwrap_or(cfg.groups.walk_length),
                set_size,
                seed: cfg.seed,
            };
            let table = build_group_sets(&g, &p, &wcfg)?;
            table.save(create(&output)?)?;
            println!("{}", json!({"nodes": table.node_count(), "set_size": table.set_size()}));
        }
        Command::Train {
            input,
            gsets,
            dim,
            method,
            epochs,
            alpha,
            negatives,
            window,
            walk_length,
            walks_per_vertex,
            p,
            q,
            output,
        } => {
            let input = required_input(input, &cfg)?;
            if let Some(v) = dim {
                cfg.train.dim = v;
            }
            if let Some(v) = method {
                cfg.train.method = v;
            }
            if let Some(v) = epochs {
                cfg.train.epochs = v;
            }
            if let Some(v) = alpha {
                cfg.train.alpha = v;
            }
            if let Some(v) = negatives {
                cfg.train.negatives = v;
            }
            if let Some(v) = window {
                cfg.train.window = v;
            }
            if let Some(v) = walk_length {
                cfg.train.walk_length = v;
            }
            if let Some(v) = walks_per_vertex {
                cfg.train.walks_per_vertex = v;
            }
            if let Some(v) = p {
                cfg.train.p = v;
            }
            if let Some(v) = q {
                cfg.train.q = v;
            }
            let g = Graph::load_edge_list(open(&input)?, cfg.directed)?;
            let table = GroupSetTable::load(open(&gsets)?)?;
            let scfg = cfg.sampler_config()?;
            let tcfg = cfg.train_config();
            let mut params = ModelParameters::init(
                table.group_count(),
                g.node_count(),
                cfg.train.dim,
                table.set_size(),
                cfg.seed,
            );
            params.zero_padding_slots(&table);
            let (params, trace) = train(&g, &table, params, &scfg, &tcfg)?;
            params.write_embeddings(&table, create(&output)?)?;
            println!(
                "{}",
                json!({
                    "embeddings": output.display().to_string(),
                    "final_mean_loss": trace.last().map(|pt| pt.mean_loss),
                })
            );
        }
        Command::EvalLp { emb, split, op, mrr_candidates } => {
            let emb = Embeddings::load(&emb)?;
            let split = EvalSplit::load(&split)?;
            let op: ScoreOp = op.as_deref().unwrap_or(&cfg.eval.score).parse()?;
            let auc = link_prediction_auc(&emb, &split, op, cfg.seed)?;
            let candidates = mrr_candidates.unwrap_or(cfg.eval.mrr_candidates);
            let mrr = if candidates > 0 {
                Some(link_prediction_mrr(&emb, &split, op, candidates, cfg.seed)?)
            } else {
                None
            };
            println!("{}", json!({"auc": auc, "mrr": mrr}));
        }
        Command::EvalClf { emb, labels, ratio } => {
            let emb = Embeddings::load(&emb)?;
            let labels = LabelSet::load(&labels, emb.node_count())?;
            let ccfg = ClassifyConfig {
                train_ratio: ratio.unwrap_or(cfg.eval.classify_train_ratio),
                seed: cfg.seed,
                ..ClassifyConfig::default()
            };
            let report = evaluate(&emb, &labels, &ccfg)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Pipeline { input, output_dir, resume } => {
            if let Some(p) = input {
                cfg.edges = p.display().to_string();
            }
            if let Some(d) = output_dir {
                cfg.output_dir = d.display().to_string();
            }
            let outcome = run_pipeline(&cfg, resume)?;
            println!("{}", serde_json::to_string(&outcome)?);
        }
        Command::Budget { nodes, groups, dim, set_size, baseline_dim } => {
            let report = report_budget(
                nodes,
                groups,
                dim.unwrap_or(cfg.train.dim),
                set_size.unwrap_or(cfg.groups.set_size),
                baseline_dim.unwrap_or(cfg.train.baseline_dim),
            );
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
