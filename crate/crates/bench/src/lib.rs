//! Shared inputs for the benchmarks in `benches/`.

use medstyle_core::mining::toy_embed;
use medstyle_core::synth::{synth_corpus, SynthParams};
use medstyle_core::{Corpus, EmbeddingMatrix};

/// Synthetic corpus with `per_style` sentences per style.
pub fn corpus(per_style: usize) -> Corpus {
    synth_corpus(&SynthParams {
        per_style,
        planted: per_style / 10,
        seed: 1,
        ..SynthParams::default()
    })
    .expect("valid synth params")
    .corpus
}

/// Toy embeddings of [`corpus`] at dimension `dim`.
pub fn embeddings(per_style: usize, dim: usize) -> (EmbeddingMatrix, EmbeddingMatrix) {
    toy_embed(&corpus(per_style), dim, 1).expect("non-empty corpus")
}

/// Expert/layman token streams, aligned by index.
pub fn sentence_pairs(per_style: usize) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let c = corpus(per_style);
    let side = |style| c.by_style(style).map(|s| s.tokens.clone()).collect();
    (side(medstyle_core::Style::Expert), side(medstyle_core::Style::Layman))
}
