//! Subcommand implementations. Each reads its inputs from the resolved
//! config, writes deterministic artifacts under `config.out`, and reports
//! failures tagged with the stage that produced them.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use log::{info, warn};
use medstyle_core::corpus::corpus_stats;
use medstyle_core::datagen::{make_batches, save_pairs};
use medstyle_core::eval::{
    bleu4, load_ratings, load_systems, style_accuracy, success_rates, train_lm, train_style_classifier,
};
use medstyle_core::mining::{load_embeddings, save_pairs_tsv, toy_embed};
use medstyle_core::term_graph::{load_graph, save_graph};
use medstyle_core::{
    build_graph as build_term_graph, build_pretraining_set, load_corpus, mine_pairs, seed, tokenize, Corpus,
    MetricReport, NoiseParams, Style, TaskTag, TerminologyGraph,
};
use serde::Serialize;
use serde_json::json;

use crate::config::PipelineConfig;

/// A failed command: the stage that failed, the process exit code, and why.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    /// Bad input or parameters (exit 2).
    pub fn input(stage: &'static str, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            stage,
            code: 2,
            error: error.into(),
        }
    }

    /// Anything else, e.g. an unwritable output directory (exit 1).
    pub fn internal(stage: &'static str, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            stage,
            code: 1,
            error: error.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:#}", self.stage, self.error)
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

trait Stage<T> {
    fn input(self, stage: &'static str) -> CmdResult<T>;
    fn internal(self, stage: &'static str) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for Result<T, E> {
    fn input(self, stage: &'static str) -> CmdResult<T> {
        self.map_err(|e| Failure::input(stage, e))
    }

    fn internal(self, stage: &'static str) -> CmdResult<T> {
        self.map_err(|e| Failure::internal(stage, e))
    }
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str, stage: &'static str) -> CmdResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Failure::input(stage, anyhow!("no {what} given (set it in the config or pass a flag)")))
}

fn out_dir(config: &PipelineConfig) -> CmdResult<&Path> {
    fs::create_dir_all(&config.out)
        .map_err(|e| anyhow!("creating {}: {e}", config.out.display()))
        .internal("output")?;
    Ok(&config.out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).internal("output")?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| anyhow!("writing {}: {e}", path.display()))
        .internal("output")
}

fn read_corpus(config: &PipelineConfig) -> CmdResult<Corpus> {
    let path = require(&config.paths.corpus, "corpus", "corpus")?;
    let corpus = load_corpus(path).input("corpus")?;
    info!("loaded {} sentences from {}", corpus.len(), path.display());
    Ok(corpus)
}

pub fn stats(config: &PipelineConfig) -> CmdResult {
    let corpus = read_corpus(config)?;
    let report = corpus_stats(&corpus);
    write_json(&out_dir(config)?.join("stats.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report).internal("output")?);
    Ok(())
}

pub fn build_graph(config: &PipelineConfig) -> CmdResult {
    let corpus = read_corpus(config)?;
    let (graph, report) = build_term_graph(&corpus, config.graph);
    if report.annotated_cuis == 0 {
        warn!("corpus has no concept annotations; the terminology graph is empty");
    }
    info!("{} edges from {} annotated concepts", graph.len(), report.annotated_cuis);
    let out = out_dir(config)?;
    save_graph(&graph, out.join("graph.tsv")).internal("output")?;
    write_json(
        &out.join("graph_report.json"),
        &json!({ "min_edit_distance": config.graph.d, "stages": report }),
    )
}

#[derive(Serialize)]
struct BatchRecord<'a> {
    batch: usize,
    items: Vec<BatchItem<'a>>,
}

#[derive(Serialize)]
struct BatchItem<'a> {
    task: TaskTag,
    index: usize,
    source_id: &'a str,
}

pub fn gen_data(config: &PipelineConfig) -> CmdResult {
    let data = &config.data;
    if data.batch_size == 0 || data.batch_size % 4 != 0 {
        return Err(Failure::input(
            "gen-data",
            anyhow!("batch size {} is not a positive multiple of 4", data.batch_size),
        ));
    }
    let corpus = read_corpus(config)?;
    let graph = if data.kba {
        let path = require(&config.paths.graph, "terminology graph (required for KBA)", "graph")?;
        load_graph(path, config.graph).input("graph")?
    } else {
        TerminologyGraph::default()
    };
    let params = NoiseParams {
        rate: data.noise_rate,
        seed: seed::derive(config.seed, "datagen"),
    };
    let (set, mut manifest) = build_pretraining_set(&corpus, &graph, &params).input("gen-data")?;

    let out = out_dir(config)?;
    for task in TaskTag::ALL {
        save_pairs(set.get(task), out.join(format!("{}.jsonl", task.as_str()))).internal("output")?;
    }

    let batch_path = out.join("batches.jsonl");
    let mut batches_written = None;
    match make_batches(&set, data.batch_size, seed::derive(config.seed, "batches")) {
        Ok(stream) => {
            let file = File::create(&batch_path)
                .map_err(|e| anyhow!("writing {}: {e}", batch_path.display()))
                .internal("output")?;
            let mut w = BufWriter::new(file);
            let mut n = 0;
            for (i, batch) in stream.enumerate() {
                let record = BatchRecord {
                    batch: i,
                    items: batch
                        .pairs
                        .iter()
                        .zip(&batch.positions)
                        .map(|(p, &index)| BatchItem {
                            task: p.task,
                            index,
                            source_id: &p.source_id,
                        })
                        .collect(),
                };
                serde_json::to_writer(&mut w, &record).internal("output")?;
                w.write_all(b"\n").internal("output")?;
                n += 1;
            }
            w.flush().internal("output")?;
            batches_written = Some(n);
        }
        Err(e) => {
            let msg = format!("batches not written: {e}");
            warn!("{msg}");
            manifest.warnings.push(msg);
            // Don't leave a stale batch file from an earlier run behind.
            if batch_path.exists() {
                fs::remove_file(&batch_path).internal("output")?;
            }
        }
    }

    write_json(
        &out.join("manifest.json"),
        &json!({
            "seed": config.seed,
            "noise_rate": data.noise_rate,
            "batch_size": data.batch_size,
            "per_task": data.batch_size / 4,
            "batches": batches_written,
            "counts": manifest.counts,
            "per_style": manifest.per_style,
            "warnings": manifest.warnings,
        }),
    )
}

pub fn mine(config: &PipelineConfig) -> CmdResult {
    let params = config.margin();
    params.validate().input("mine")?;
    let (expert, layman) = match config.mining.toy_embed {
        Some(dim) => {
            let corpus = read_corpus(config)?;
            toy_embed(&corpus, dim, seed::derive(config.seed, "toy-embed")).input("embed")?
        }
        None => {
            let e = require(&config.paths.expert_embeddings, "expert embeddings (or --toy-embed)", "embed")?;
            let l = require(&config.paths.layman_embeddings, "layman embeddings (or --toy-embed)", "embed")?;
            let e = load_embeddings(e, Style::Expert).input("embed")?;
            let l = load_embeddings(l, Style::Layman).input("embed")?;
            if let Some(path) = &config.paths.corpus {
                check_ids(&load_corpus(path).input("corpus")?, &e, &l)?;
            }
            (e, l)
        }
    };
    let result = mine_pairs(&expert, &layman, &params).input("mine")?;
    info!(
        "{} pairs from {} expert x {} layman sentences",
        result.pairs.len(),
        expert.rows(),
        layman.rows()
    );
    let out = out_dir(config)?;
    save_pairs_tsv(&result.pairs, out.join("pairs.tsv")).internal("output")?;
    write_json(&out.join("mining_diagnostics.json"), &result.diagnostics)
}

/// Embedding rows must name sentences of the matching style.
fn check_ids(
    corpus: &Corpus,
    expert: &medstyle_core::EmbeddingMatrix,
    layman: &medstyle_core::EmbeddingMatrix,
) -> CmdResult {
    for m in [expert, layman] {
        let style = m.style();
        let known: std::collections::HashSet<&str> = corpus.by_style(style).map(|s| s.id.as_str()).collect();
        if let Some(id) = m.ids().iter().find(|id| !known.contains(id.as_str())) {
            return Err(Failure::input(
                "embed",
                anyhow!("{style} embedding id {id:?} is not a {style} sentence in the corpus"),
            ));
        }
    }
    Ok(())
}

fn read_lines(path: &Path, stage: &'static str) -> CmdResult<Vec<Vec<String>>> {
    let file = File::open(path)
        .map_err(|e| anyhow!("{}: {e}", path.display()))
        .input(stage)?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map(|l| tokenize(&l)))
        .collect::<std::io::Result<_>>()
        .map_err(|e| anyhow!("{}: {e}", path.display()))
        .input(stage)
}

pub fn evaluate(config: &PipelineConfig) -> CmdResult {
    let paths = &config.paths;
    let mut report = MetricReport::default();

    let hypotheses = match (&paths.hypotheses, &paths.references) {
        (Some(h), Some(r)) => {
            let hyps = read_lines(h, "hypotheses")?;
            let refs = read_lines(r, "references")?;
            report.bleu = Some(bleu4(&hyps, &refs).input("bleu")?);
            Some(hyps)
        }
        (None, None) => None,
        _ => {
            return Err(Failure::input(
                "evaluate",
                anyhow!("hypotheses and references must be given together"),
            ))
        }
    };

    if let (Some(hyps), Some(_)) = (&hypotheses, &paths.corpus) {
        let corpus = read_corpus(config)?;
        let target = config.eval.target_style;
        let lm_text: Vec<Vec<String>> = corpus
            .sentences
            .iter()
            .filter(|s| target.is_none_or(|t| s.style == t))
            .map(|s| s.tokens.clone())
            .collect();
        let lm = train_lm(&lm_text, config.lm()).input("lm")?;
        report.ppl = Some(lm.perplexity(hyps).input("lm")?);
        match target {
            Some(t) => {
                let clf = train_style_classifier(&corpus, config.classifier()).input("classifier")?;
                let intended = vec![t; hyps.len()];
                report.style_accuracy = Some(style_accuracy(&clf, hyps, &intended).input("classifier")?);
            }
            None => warn!("no target style set; style accuracy skipped"),
        }
    }

    if let Some(path) = &paths.ratings {
        let records = load_ratings(path).input("ratings")?;
        report.success_rates = Some(success_rates(&records).input("ratings")?);
    }
    if let Some(path) = &paths.systems {
        let rows = load_systems(path).input("systems")?;
        report = report.with_systems(&rows).input("correlation")?;
    }

    write_json(&out_dir(config)?.join("metrics.json"), &report)
}
