//! Pseudo-parallel corpus mining with the ratio margin criterion.
//!
//! For an expert sentence `x` and a layman sentence `y`,
//!
//! ```text
//! margin(x, y) = cos(x, y) / ( sum_{z in N_k(x)} cos(x, z) / 2k + sum_{z in N_k(y)} cos(y, z) / 2k )
//! ```
//!
//! where `N_k(x)` are the `k` nearest layman sentences of `x` and `N_k(y)` the
//! `k` nearest expert sentences of `y`. Mining keeps, for every sentence of
//! either style, its best partner by margin, unions both directions, sweeps
//! the candidates greedily by descending margin so each sentence is used at
//! most once, and drops pairs below the threshold.

mod embed;
mod knn;
mod toy;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::embed::{ids_path, load_embeddings, save_embeddings, EmbeddingMatrix, MAGIC};
pub use self::knn::{knn, Neighbor};
pub use self::toy::{ngram_bucket, toy_embed, toy_vector, MIN_TOY_DIM};

use self::knn::{best_partners, neighbor_lists, UnitRows};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginParams {
    pub k: usize,
    pub threshold: f64,
}

impl Default for MarginParams {
    fn default() -> Self {
        MarginParams { k: 4, threshold: 1.06 }
    }
}

impl MarginParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Param("k must be at least 1".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Param(format!("threshold {} must be positive", self.threshold)));
        }
        Ok(())
    }
}

/// Margin of a pair given its cosine and the neighbour cosines of both sides.
///
/// Returns `None` when the denominator is not positive.
pub fn margin(cos_xy: f64, x_neighbors: &[f64], y_neighbors: &[f64]) -> Option<f64> {
    assert_eq!(x_neighbors.len(), y_neighbors.len(), "neighbourhoods must both have k entries");
    assert!(!x_neighbors.is_empty(), "k must be at least 1");
    let denom = (x_neighbors.iter().sum::<f64>() + y_neighbors.iter().sum::<f64>())
        / (2 * x_neighbors.len()) as f64;
    (denom > 0.0).then(|| cos_xy / denom)
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum();
    let na = a.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
    let nb = b.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinedPair {
    pub expert_id: String,
    pub layman_id: String,
    pub margin: f64,
    #[serde(skip)]
    pub expert_index: usize,
    #[serde(skip)]
    pub layman_index: usize,
}

/// Candidate-count bookkeeping for one mining run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MiningDiagnostics {
    pub expert_sentences: usize,
    pub layman_sentences: usize,
    pub k: usize,
    pub threshold: f64,
    pub forward_candidates: usize,
    pub backward_candidates: usize,
    /// Distinct candidates after collapsing pairs found in both directions.
    pub union_candidates: usize,
    pub skipped_nonpositive_denominator: u64,
    pub after_dedup: usize,
    pub after_threshold: usize,
    /// Pairs kept when thresholding before the greedy sweep instead of after.
    pub threshold_then_dedup: usize,
    pub histogram: MarginHistogram,
}

/// 20 equal-width bins spanning the candidate margin range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginHistogram {
    pub min: f64,
    pub max: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

pub const HISTOGRAM_BINS: usize = 20;

impl MarginHistogram {
    pub fn new(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let mut counts = vec![0; HISTOGRAM_BINS];
        if values.is_empty() {
            return MarginHistogram {
                min: 0.0,
                max: 0.0,
                width: 0.0,
                counts,
            };
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (max - min) / HISTOGRAM_BINS as f64;
        for v in values {
            let bin = if width > 0.0 {
                (((v - min) / width) as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            counts[bin] += 1;
        }
        MarginHistogram {
            min,
            max,
            width,
            counts,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiningResult {
    pub pairs: Vec<MinedPair>,
    pub diagnostics: MiningDiagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    expert: usize,
    layman: usize,
    margin: f64,
}

fn by_margin(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.margin
        .total_cmp(&a.margin)
        .then(a.expert.cmp(&b.expert))
        .then(a.layman.cmp(&b.layman))
}

fn greedy_sweep(sorted: &[Candidate]) -> Vec<Candidate> {
    let mut used_expert = HashSet::new();
    let mut used_layman = HashSet::new();
    sorted
        .iter()
        .filter(|c| {
            if used_expert.contains(&c.expert) || used_layman.contains(&c.layman) {
                return false;
            }
            used_expert.insert(c.expert);
            used_layman.insert(c.layman);
            true
        })
        .copied()
        .collect()
}

/// Mines expert/layman pairs; output is sorted by descending margin.
pub fn mine_pairs(expert: &EmbeddingMatrix, layman: &EmbeddingMatrix, params: &MarginParams) -> Result<MiningResult> {
    params.validate()?;
    if expert.is_empty() || layman.is_empty() {
        return Err(Error::Param("both embedding sets must be non-empty".into()));
    }
    knn::validate(expert, layman, params.k)?;
    let k = params.k;

    let ex = UnitRows::new(expert);
    let lay = UnitRows::new(layman);

    // One pass yields both N_k(x) over layman rows and N_k(y) over expert rows.
    let (fwd, bwd) = neighbor_lists(&ex, &lay, k, true);
    let bwd = bwd.expect("column lists requested");
    let half_mean = |lists: &knn::TopK, r: usize| lists.entries(r).map(|(_, s)| s).sum::<f64>() / (2 * k) as f64;
    let ex_term: Vec<f64> = (0..expert.rows()).map(|r| half_mean(&fwd, r)).collect();
    let lay_term: Vec<f64> = (0..layman.rows()).map(|r| half_mean(&bwd, r)).collect();

    let (best_fwd, best_bwd, skipped) = best_partners(&ex, &lay, |i, j, sim| {
        let denom = ex_term[i] + lay_term[j];
        (denom > 0.0).then(|| sim / denom)
    });

    let forward: Vec<Candidate> = (0..expert.rows())
        .filter_map(|i| {
            best_fwd.entries(i).next().map(|(j, m)| Candidate {
                expert: i,
                layman: j as usize,
                margin: m,
            })
        })
        .collect();
    let backward: Vec<Candidate> = (0..layman.rows())
        .filter_map(|j| {
            best_bwd.entries(j).next().map(|(i, m)| Candidate {
                expert: i as usize,
                layman: j,
                margin: m,
            })
        })
        .collect();

    let mut candidates: Vec<Candidate> = forward.iter().chain(&backward).copied().collect();
    candidates.sort_by(by_margin);
    candidates.dedup_by(|a, b| a.expert == b.expert && a.layman == b.layman);
    // Both directions compute the same margin for a shared pair, so adjacent
    // duplicates after sorting are exact copies.

    let kept = greedy_sweep(&candidates);
    let after_dedup = kept.len();
    let final_pairs: Vec<Candidate> = kept.into_iter().filter(|c| c.margin >= params.threshold).collect();
    let pre_filtered: Vec<Candidate> = candidates
        .iter()
        .filter(|c| c.margin >= params.threshold)
        .copied()
        .collect();
    let threshold_then_dedup = greedy_sweep(&pre_filtered).len();

    let diagnostics = MiningDiagnostics {
        expert_sentences: expert.rows(),
        layman_sentences: layman.rows(),
        k,
        threshold: params.threshold,
        forward_candidates: forward.len(),
        backward_candidates: backward.len(),
        union_candidates: candidates.len(),
        skipped_nonpositive_denominator: skipped,
        after_dedup,
        after_threshold: final_pairs.len(),
        threshold_then_dedup,
        histogram: MarginHistogram::new(candidates.iter().map(|c| c.margin)),
    };
    let pairs = final_pairs
        .into_iter()
        .map(|c| MinedPair {
            expert_id: expert.ids()[c.expert].clone(),
            layman_id: layman.ids()[c.layman].clone(),
            margin: c.margin,
            expert_index: c.expert,
            layman_index: c.layman,
        })
        .collect();
    Ok(MiningResult { pairs, diagnostics })
}

pub const PAIRS_HEADER: &str = "expert_id\tlayman_id\tmargin";

pub fn write_pairs_tsv<W: Write>(pairs: &[MinedPair], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PAIRS_HEADER}")?;
    for p in pairs {
        writeln!(out, "{}\t{}\t{:.6}", p.expert_id, p.layman_id, p.margin)?;
    }
    out.flush()
}

pub fn save_pairs_tsv(pairs: &[MinedPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_pairs_tsv(pairs, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
