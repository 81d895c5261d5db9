//! Synthetic two-style corpora with planted cross-style near-duplicates.
//!
//! Sentences mix a small set of high-frequency function words with
//! Zipf-distributed content words, so unrelated sentences still share many
//! n-grams (like real text does). Each planted pair is an expert sentence and
//! a layman copy with one token replaced, which mining should recover.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Zipf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, Style};
use crate::error::{Error, Result};
use crate::seed::rng_for;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub per_style: usize,
    pub planted: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub function_words: usize,
    /// Probability that a token is a function word.
    pub function_share: f64,
    pub content_words: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            per_style: 500,
            planted: 50,
            min_len: 25,
            max_len: 40,
            function_words: 20,
            function_share: 0.6,
            content_words: 3000,
            zipf_exponent: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// `(expert_id, layman_id)` of every planted pair.
    pub planted: Vec<(String, String)>,
}

fn sentence_tokens(params: &SynthParams, zipf: &Zipf<f64>, label: &str) -> Vec<String> {
    let mut rng = rng_for(params.seed, label);
    let len = rng.gen_range(params.min_len..=params.max_len);
    (0..len)
        .map(|_| {
            if rng.gen_bool(params.function_share) {
                format!("f{}", rng.gen_range(0..params.function_words))
            } else {
                format!("w{}", zipf.sample(&mut rng) as usize - 1)
            }
        })
        .collect()
}

fn style_sentences(params: &SynthParams, zipf: &Zipf<f64>, style: Style) -> Vec<Sentence> {
    let prefix = &style.as_str()[..1];
    (0..params.per_style)
        .into_par_iter()
        .map(|i| {
            let tokens = sentence_tokens(params, zipf, &format!("synth\u{1f}{prefix}\u{1f}{i}"));
            Sentence::new(format!("{prefix}{i}"), style, tokens)
        })
        .collect()
}

pub fn synth_corpus(params: &SynthParams) -> Result<SynthCorpus> {
    if params.planted > params.per_style {
        return Err(Error::Param(format!(
            "cannot plant {} pairs among {} sentences per style",
            params.planted, params.per_style
        )));
    }
    if params.min_len == 0 || params.min_len > params.max_len {
        return Err(Error::Param(format!("bad sentence length range {}..={}", params.min_len, params.max_len)));
    }
    if params.function_words == 0 || !(0.0..=1.0).contains(&params.function_share) {
        return Err(Error::Param("function-word settings out of range".into()));
    }
    let zipf = Zipf::new(params.content_words as u64, params.zipf_exponent)
        .map_err(|e| Error::Param(format!("content vocabulary: {e}")))?;

    let expert = style_sentences(params, &zipf, Style::Expert);
    let mut layman = style_sentences(params, &zipf, Style::Layman);

    let mut rng = rng_for(params.seed, "synth-plant");
    let experts = sample(&mut rng, params.per_style, params.planted);
    let laymen = sample(&mut rng, params.per_style, params.planted);
    let mut planted = Vec::with_capacity(params.planted);
    for (j, (e, l)) in experts.iter().zip(laymen.iter()).enumerate() {
        let mut tokens = expert[e].tokens.clone();
        let pos = rng.gen_range(0..tokens.len());
        tokens[pos] = format!("p{j}");
        layman[l].tokens = tokens;
        planted.push((expert[e].id.clone(), layman[l].id.clone()));
    }
    planted.sort();

    let mut sentences = expert;
    sentences.append(&mut layman);
    Ok(SynthCorpus {
        corpus: Corpus {
            sentences,
            provenance: format!("synthetic(seed={})", params.seed),
        },
        planted,
    })
}
