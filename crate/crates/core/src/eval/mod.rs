//! Automatic metrics, human-rating success rates and metric correlations.

pub mod bleu;
pub mod classifier;
pub mod corr;
pub mod lm;
pub mod ratings;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bleu::{bleu4, sentence_bleu, BleuStats};
pub use classifier::{style_accuracy, train_on_tokens, train_style_classifier, ClassifierParams, StyleClassifier};
pub use corr::{average_ranks, pearson, spearman, Correlation};
pub use lm::{perplexity, train_lm, LmParams, NGramLM};
pub use ratings::{
    load_ratings, read_ratings, success_rates, success_rates_with, write_ratings, Aggregation, Direction,
    RatingRecord, SuccessReport,
};

/// System-level automatic and human metrics, one row per system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemMetrics {
    pub system: String,
    pub bleu: f64,
    pub style_accuracy: f64,
    pub ppl: f64,
    pub csr: f64,
    pub usr: f64,
    pub gsr: f64,
}

/// Automatic metric paired with the human rate it is meant to track.
pub const METRIC_PAIRS: [(&str, &str); 3] = [("bleu", "csr"), ("style_accuracy", "usr"), ("ppl", "gsr")];

fn column(rows: &[SystemMetrics], name: &str) -> Vec<f64> {
    rows.iter()
        .map(|r| match name {
            "bleu" => r.bleu,
            "style_accuracy" => r.style_accuracy,
            "ppl" => r.ppl,
            "csr" => r.csr,
            "usr" => r.usr,
            "gsr" => r.gsr,
            _ => unreachable!("unknown metric column {name}"),
        })
        .collect()
}

/// Correlation for each metric pair, keyed `"metric~rate"`.
pub fn metric_correlations(
    rows: &[SystemMetrics],
    f: fn(&[f64], &[f64]) -> Result<Correlation>,
) -> Result<BTreeMap<String, Correlation>> {
    METRIC_PAIRS
        .iter()
        .map(|&(a, b)| Ok((format!("{a}~{b}"), f(&column(rows, a), &column(rows, b))?)))
        .collect()
}

pub fn read_systems<R: Read>(reader: R, source: &str) -> Result<Vec<SystemMetrics>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e: csv::Error| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::schema(source, line, e.to_string())
            })
        })
        .collect()
}

pub fn load_systems(path: &Path) -> Result<Vec<SystemMetrics>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_systems(file, &path.display().to_string())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub success_rates: Option<SuccessReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub style_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ppl: Option<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub pearson: BTreeMap<String, Correlation>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub spearman: BTreeMap<String, Correlation>,
}

impl MetricReport {
    /// Fills both correlation blocks from a system table.
    pub fn with_systems(mut self, rows: &[SystemMetrics]) -> Result<Self> {
        self.pearson = metric_correlations(rows, pearson)?;
        self.spearman = metric_correlations(rows, spearman)?;
        Ok(self)
    }
}
