//! Deterministic bag-of-n-grams embeddings for offline testing.
//!
//! Each word 1-, 2- and 3-gram is hashed to one of `dim` buckets; a sentence
//! vector is the L2-normalized bucket count vector. Sentences sharing most of
//! their n-grams therefore have high cosine similarity.

use rayon::prelude::*;

use super::embed::EmbeddingMatrix;
use crate::corpus::{Corpus, Sentence, Style};
use crate::error::{Error, Result};
use crate::seed::stable_hash;

pub const MIN_TOY_DIM: usize = 8;

/// Bucket index of an n-gram under `seed`.
pub fn ngram_bucket(ngram: &[String], dim: usize, seed: u64) -> usize {
    let mut key = String::new();
    for (i, tok) in ngram.iter().enumerate() {
        if i > 0 {
            key.push('\u{1f}');
        }
        key.push_str(tok);
    }
    (stable_hash(seed, key.as_bytes()) % dim as u64) as usize
}

pub fn toy_vector(tokens: &[String], dim: usize, seed: u64) -> Vec<f32> {
    let mut counts = vec![0f64; dim];
    for n in 1..=3 {
        for gram in tokens.windows(n) {
            counts[ngram_bucket(gram, dim, seed)] += 1.0;
        }
    }
    let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
    counts.iter().map(|c| (c / norm) as f32).collect()
}

fn embed_style(sentences: &[&Sentence], style: Style, dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    if let Some(s) = sentences.iter().find(|s| s.tokens.is_empty()) {
        return Err(Error::InvalidSentence {
            id: s.id.clone(),
            message: "cannot embed a sentence without tokens".into(),
        });
    }
    let values: Vec<f32> = sentences
        .par_iter()
        .flat_map_iter(|s| toy_vector(&s.tokens, dim, seed))
        .collect();
    let ids = sentences.iter().map(|s| s.id.clone()).collect();
    EmbeddingMatrix::new(style, ids, dim, values)
}

/// Embeds every sentence, returning the expert and layman matrices.
pub fn toy_embed(corpus: &Corpus, dim: usize, seed: u64) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    if dim < MIN_TOY_DIM {
        return Err(Error::Param(format!("toy embedding dimension {dim} is below {MIN_TOY_DIM}")));
    }
    let expert: Vec<&Sentence> = corpus.by_style(Style::Expert).collect();
    let layman: Vec<&Sentence> = corpus.by_style(Style::Layman).collect();
    Ok((
        embed_style(&expert, Style::Expert, dim, seed)?,
        embed_style(&layman, Style::Layman, dim, seed)?,
    ))
}
