//! Corpus engineering for medical expert/layman style transfer.
//!
//! - [`corpus`]: sentences, concept annotations, JSONL I/O and tokenization
//! - [`term_graph`]: one-to-one expert/layman terminology graph built from annotations
//! - [`datagen`]: knowledge-base assimilation and denoising pretraining pairs, balanced batches
//! - [`mining`]: margin-based pseudo-parallel mining over sentence embeddings
//! - [`eval`]: BLEU, n-gram perplexity, style accuracy, human success rates, correlations
//!
//! Every random choice is derived from one global seed (see [`seed`]), so all
//! outputs are reproducible regardless of thread count.

pub mod corpus;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod mining;
pub mod seed;
pub mod synth;
pub mod term_graph;

pub use corpus::{load_corpus, save_corpus, tokenize, ConceptSpan, Corpus, Sentence, StatsReport, Style};
pub use datagen::{build_pretraining_set, DataManifest, NoiseParams, PretrainingSet, TaskTag, TrainingPair};
pub use error::{Error, Result};
pub use eval::{MetricReport, SuccessReport};
pub use mining::{mine_pairs, EmbeddingMatrix, MarginParams, MinedPair, MiningResult};
pub use term_graph::{build_graph, RefineParams, TermEdge, TerminologyGraph};
