//! Command-line interface: training, generation, import, querying,
//! evaluation and serving.

use std::fs;
use std::future::IntoFuture;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stdqa_core::fixtures::group_pairs;
use stdqa_core::kb::{parse_import, KbStore};
use stdqa_core::ner::{read_tagged, NerPipeline, NerTrainOptions};
use stdqa_core::nn::bce_loss;
use stdqa_core::qgen::{generate_corpus_with_entities, parse_corpus, InterrogativeMap};
use stdqa_core::service::{AskRequest, QaService, ServiceConfig};
use stdqa_core::sim::{
    accuracy_from_scores, read_pairs, score_pairs, train_sim, PairRecord, SimModelConfig,
    SimPipeline, TrainOptions,
};
use stdqa_core::text::SegmenterConfig;
use thiserror::Error;

/// A problem with how the command was invoked; exits with status 2.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "stdqa", version, about = "Standards consultation QA engine")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

/// Service settings shared by every subcommand. Flags override the config
/// file, which overrides built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// TOML config file.
    #[arg(long, global = true, env = "QA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Listen address for `serve` [default: 127.0.0.1:8080].
    #[arg(long, global = true)]
    pub bind: Option<String>,
    /// Knowledge store snapshot (JSON).
    #[arg(long, global = true)]
    pub kb: Option<PathBuf>,
    /// Similarity model checkpoint.
    #[arg(long, global = true, visible_alias = "model")]
    pub sim_model: Option<PathBuf>,
    /// Entity tagger checkpoint.
    #[arg(long, global = true, visible_alias = "ner")]
    pub ner_model: Option<PathBuf>,
    /// Vocabulary file replacing the one stored in the similarity checkpoint.
    #[arg(long, global = true)]
    pub vocab: Option<PathBuf>,
    /// Candidates kept by the token-overlap prefilter; 0 scores every record.
    #[arg(long, global = true)]
    pub prefilter_m: Option<usize>,
    /// Largest `top_k` a request may ask for [default: 20].
    #[arg(long, global = true)]
    pub top_k_cap: Option<usize>,
    /// Seed for training and data shuffling [default: 7].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl GlobalOpts {
    pub fn service_config(&self) -> Result<ServiceConfig> {
        let mut config = match &self.config {
            Some(path) => ServiceConfig::load(path)?,
            None => ServiceConfig::default(),
        };
        if let Some(v) = &self.bind {
            config.bind.clone_from(v);
        }
        for (slot, flag) in [
            (&mut config.kb, &self.kb),
            (&mut config.sim_model, &self.sim_model),
            (&mut config.ner_model, &self.ner_model),
            (&mut config.vocab, &self.vocab),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if let Some(v) = self.prefilter_m {
            config.prefilter_m = v;
        }
        if let Some(v) = self.top_k_cap {
            config.top_k_cap = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the sentence-pair similarity model.
    TrainSim(TrainSimArgs),
    /// Train the BiLSTM-CRF entity tagger.
    TrainNer(TrainNerArgs),
    /// Generate question-answer pairs from standard sentences.
    Generate(GenerateArgs),
    /// Import records into the knowledge store.
    Import(ImportArgs),
    /// Ask a question against the knowledge store.
    Ask(AskArgs),
    /// Measure similarity accuracy on labelled pairs.
    Eval(EvalArgs),
    /// Run the HTTP service.
    Serve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Segmenter {
    Char,
    MaxMatch,
}

#[derive(Debug, Args)]
pub struct TrainSimArgs {
    /// Pair file, JSON Lines of {"q1","q2","label"}.
    #[arg(long, required_unless_present = "from_kb")]
    pub data: Option<PathBuf>,
    /// Build pairs from the answer groups of a knowledge-store import file instead.
    #[arg(long, conflicts_with = "data")]
    pub from_kb: Option<PathBuf>,
    /// Perturbed copies per question when building pairs with --from-kb.
    #[arg(long, default_value_t = 4)]
    pub augment: usize,
    /// Output checkpoint.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss and accuracy, as JSON.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Segmenter::Char)]
    pub segmenter: Segmenter,
    /// One word per line; required for max-match segmentation.
    #[arg(long, required_if_eq("segmenter", "max-match"))]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 32)]
    pub max_len: usize,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Train the plain siamese BiLSTM without interactive attention.
    #[arg(long)]
    pub no_attention: bool,
}

#[derive(Debug, Args)]
pub struct TrainNerArgs {
    /// Tagged sentences, JSON Lines of {"text": [tokens], "tags": [BIO labels]}.
    #[arg(long)]
    pub data: PathBuf,
    /// Output checkpoint.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss and token accuracy, as JSON.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// One sentence per line, optionally prefixed by `section<TAB>`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output pairs, JSON Lines in import format.
    #[arg(long)]
    pub out: PathBuf,
    /// Document name recorded as the source of every pair.
    #[arg(long)]
    pub doc: Option<String>,
    /// Also write the extracted entities, JSON Lines keyed by sentence.
    #[arg(long)]
    pub entities: Option<PathBuf>,
    /// JSON map from entity type to interrogative overrides.
    #[arg(long)]
    pub interrogatives: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// JSON array or JSON Lines of records.
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    /// Question text.
    #[arg(long)]
    pub question: String,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Labelled pairs, JSON Lines of {"q1","q2","label"}.
    #[arg(long)]
    pub data: PathBuf,
    /// Scores at or above this count as similar.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| usage(format!("{flag} is required (flag or config file)")))
}

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.global.service_config()?;
    match cli.command {
        Command::TrainSim(args) => train_sim_cmd(&args, config.seed),
        Command::TrainNer(args) => train_ner_cmd(&args, config.seed),
        Command::Generate(args) => generate_cmd(&args, &config),
        Command::Import(args) => import_cmd(&args, &config),
        Command::Ask(args) => ask_cmd(&args, config),
        Command::Eval(args) => eval_cmd(&args, &config),
        Command::Serve => serve_cmd(config),
    }
}

fn train_sim_cmd(args: &TrainSimArgs, seed: u64) -> Result<()> {
    let records: Vec<PairRecord> = match (&args.data, &args.from_kb) {
        (Some(path), _) => {
            read_pairs(path).with_context(|| format!("reading {}", path.display()))?
        }
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            group_pairs(&parse_import(&text)?, args.augment, seed)
        }
        (None, None) => return Err(usage("--data or --from-kb is required")),
    };
    let segmenter = match args.segmenter {
        Segmenter::Char => SegmenterConfig::Char,
        Segmenter::MaxMatch => {
            let lexicon = require(&args.lexicon, "--lexicon")?;
            SegmenterConfig::from_lexicon_file(lexicon)
                .with_context(|| format!("reading {}", lexicon.display()))?
        }
    };
    let text = SimPipeline::encoder_for(&records, segmenter, args.min_count, args.max_len);
    let examples = SimPipeline::examples(&text, &records);
    let config = SimModelConfig {
        max_len: args.max_len,
        interactive_attention: !args.no_attention,
        seed,
        ..SimModelConfig::new(text.vocab.len(), args.embed_dim, args.hidden)
    };
    let options = TrainOptions {
        epochs: args.epochs,
        batch_size: args.batch_size,
        ..Default::default()
    };
    tracing::info!(
        pairs = examples.len(),
        vocab = text.vocab.len(),
        "training similarity model"
    );
    let (model, history) = train_sim(&examples, &config, &options)?;
    SimPipeline { model, text }.save(&args.out)?;
    if let Some(path) = &args.history {
        write_json(path, &history)?;
    }
    if let Some(last) = history.epochs.last() {
        println!(
            "{}",
            serde_json::json!({"epochs": history.epochs.len(), "train_loss": last.train_loss,
                "train_accuracy": last.train_accuracy, "val_accuracy": last.val_accuracy})
        );
    }
    Ok(())
}

fn train_ner_cmd(args: &TrainNerArgs, seed: u64) -> Result<()> {
    let corpus =
        read_tagged(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let options = NerTrainOptions {
        epochs: args.epochs,
        batch_size: args.batch_size,
        ..Default::default()
    };
    let (tagger, history) =
        NerPipeline::train(&corpus, args.embed_dim, args.hidden, seed, &options)?;
    tagger.save(&args.out)?;
    if let Some(path) = &args.history {
        write_json(path, &history)?;
    }
    if let Some(last) = history.epochs.last() {
        println!(
            "{}",
            serde_json::json!({"epochs": history.epochs.len(), "loss": last.loss, "token_accuracy": last.token_accuracy})
        );
    }
    Ok(())
}

fn generate_cmd(args: &GenerateArgs, config: &ServiceConfig) -> Result<()> {
    let tagger_path = require(&config.ner_model, "--ner-model")?;
    let tagger = NerPipeline::load(tagger_path)
        .with_context(|| format!("loading {}", tagger_path.display()))?;
    let map = match &args.interrogatives {
        Some(p) => InterrogativeMap::load(p)?,
        None => InterrogativeMap::default(),
    };
    let text = fs::read_to_string(&args.corpus)
        .with_context(|| format!("reading {}", args.corpus.display()))?;
    let corpus = parse_corpus(&text, args.doc.as_deref());
    let (pairs, entities) = generate_corpus_with_entities(&corpus, &tagger, &map)?;
    let mut out = String::new();
    for p in &pairs {
        out += &(serde_json::to_string(p)? + "\n");
    }
    fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.entities {
        let mut out = String::new();
        for e in &entities {
            out += &(serde_json::to_string(e)? + "\n");
        }
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "{}",
        serde_json::json!({"sentences": corpus.len(), "pairs": pairs.len()})
    );
    Ok(())
}

fn import_cmd(args: &ImportArgs, config: &ServiceConfig) -> Result<()> {
    let kb = require(&config.kb, "--kb")?;
    let mut store = KbStore::open(kb).with_context(|| format!("opening {}", kb.display()))?;
    let added = store
        .import_json(&args.file)
        .with_context(|| format!("importing {}", args.file.display()))?;
    store.compact()?;
    println!("{}", serde_json::json!({ "added": added }));
    Ok(())
}

fn ask_cmd(args: &AskArgs, config: ServiceConfig) -> Result<()> {
    require(&config.kb, "--kb")?;
    require(&config.sim_model, "--sim-model")?;
    let svc = QaService::new(config);
    svc.load()?;
    let resp = svc
        .handle_ask(&AskRequest {
            question: args.question.clone(),
            top_k: args.top_k,
        })
        .map_err(|e| anyhow::anyhow!("{}: {}", e.code, e.message))?;
    println!("{}", serde_json::to_string_pretty(&resp)?);
    Ok(())
}

fn eval_cmd(args: &EvalArgs, config: &ServiceConfig) -> Result<()> {
    let model_path = require(&config.sim_model, "--sim-model")?;
    let pipeline = SimPipeline::load(model_path)
        .with_context(|| format!("loading {}", model_path.display()))?;
    let records =
        read_pairs(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let examples = SimPipeline::examples(&pipeline.text, &records);
    let scored = score_pairs(&pipeline.model, &examples)?;
    let accuracy =
        accuracy_from_scores(&scored, args.threshold).ok_or_else(|| usage("no usable pairs"))?;
    let loss = scored
        .iter()
        .map(|&(s, y)| bce_loss(s, f64::from(y)))
        .sum::<f64>()
        / scored.len() as f64;
    println!(
        "{}",
        serde_json::json!({"pairs": scored.len(), "skipped": records.len() - scored.len(),
            "accuracy": accuracy, "loss": loss, "threshold": args.threshold})
    );
    Ok(())
}

fn serve_cmd(config: ServiceConfig) -> Result<()> {
    config.check_files()?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(serve(config))
}

/// Binds, then loads models in the background; `/health` reports
/// `starting` until loading finishes. A load failure stops the server.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .with_context(|| format!("binding {}", config.bind))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let svc = Arc::new(QaService::new(config));
    let app = crate::http::router(svc.clone());
    let loader = tokio::task::spawn_blocking(move || svc.load());
    let server = axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .into_future();
    tokio::pin!(server);
    tokio::select! {
        res = &mut server => return Ok(res?),
        loaded = loader => {
            loaded??;
            tracing::info!("models loaded");
        }
    }
    Ok(server.await?)
}
