//! Interpolated Kneser-Ney n-gram language model with a fixed discount.
//!
//! The highest order uses raw counts; every lower order uses continuation
//! counts (the number of distinct words seen to the left). The unigram level
//! interpolates with a uniform distribution over the vocabulary, so every
//! vocabulary word, `<unk>` included, has non-zero probability when the
//! discount is positive.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

const UNK_ID: u32 = 0;
const BOS_ID: u32 = 1;
const EOS_ID: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmParams {
    pub order: usize,
    pub discount: f64,
    /// Map words seen once in training to `<unk>`.
    pub unk_singletons: bool,
}

impl Default for LmParams {
    fn default() -> Self {
        LmParams {
            order: 5,
            discount: 0.75,
            unk_singletons: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct ContextStats {
    total: f64,
    distinct: f64,
}

#[derive(Clone, Debug)]
pub struct NGramLM {
    params: LmParams,
    vocab: HashMap<String, u32>,
    words: Vec<String>,
    /// `counts[n - 1]`: n-gram -> count (raw at the top order, continuation below).
    counts: Vec<HashMap<Vec<u32>, f64>>,
    /// `contexts[n - 1]`: (n-1)-gram history -> totals over its continuations.
    contexts: Vec<HashMap<Vec<u32>, ContextStats>>,
}

fn padded(ids: impl Iterator<Item = u32>, order: usize) -> Vec<u32> {
    let mut seq = vec![BOS_ID; order - 1];
    seq.extend(ids);
    seq.push(EOS_ID);
    seq
}

/// Trains a model on tokenized sentences.
pub fn train_lm(sentences: &[Vec<String>], params: LmParams) -> Result<NGramLM> {
    if params.order == 0 {
        return Err(Error::Param("language model order must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&params.discount) {
        return Err(Error::Param(format!("discount {} is outside [0, 1)", params.discount)));
    }
    if sentences.is_empty() {
        return Err(Error::Input("cannot train a language model on an empty corpus".into()));
    }
    let order = params.order;

    let mut freq: HashMap<&str, usize> = HashMap::new();
    for s in sentences {
        for t in s {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut words = vec![UNK.to_string(), BOS.to_string(), EOS.to_string()];
    let mut kept: Vec<&str> = freq
        .iter()
        .filter(|(w, &c)| !(params.unk_singletons && c == 1) && ![UNK, BOS, EOS].contains(w))
        .map(|(&w, _)| w)
        .collect();
    kept.sort_unstable();
    words.extend(kept.iter().map(|w| w.to_string()));
    let vocab: HashMap<String, u32> = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();

    let mut counts: Vec<HashMap<Vec<u32>, f64>> = vec![HashMap::new(); order];
    for s in sentences {
        let seq = padded(s.iter().map(|t| vocab.get(t.as_str()).copied().unwrap_or(UNK_ID)), order);
        for gram in seq.windows(order) {
            *counts[order - 1].entry(gram.to_vec()).or_default() += 1.0;
        }
    }
    for n in (1..order).rev() {
        let mut lower: HashMap<Vec<u32>, f64> = HashMap::new();
        for gram in counts[n].keys() {
            *lower.entry(gram[1..].to_vec()).or_default() += 1.0;
        }
        counts[n - 1] = lower;
    }
    let contexts = counts
        .iter()
        .map(|table| {
            let mut ctx: HashMap<Vec<u32>, ContextStats> = HashMap::new();
            for (gram, &c) in table {
                let e = ctx.entry(gram[..gram.len() - 1].to_vec()).or_default();
                e.total += c;
                e.distinct += 1.0;
            }
            ctx
        })
        .collect();

    Ok(NGramLM {
        params,
        vocab,
        words,
        counts,
        contexts,
    })
}

impl NGramLM {
    pub fn order(&self) -> usize {
        self.params.order
    }

    /// Words the model can predict: the vocabulary minus `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str).filter(|w| *w != BOS)
    }

    fn predictable_count(&self) -> f64 {
        (self.words.len() - 1) as f64
    }

    fn id(&self, word: &str) -> u32 {
        self.vocab.get(word).copied().unwrap_or(UNK_ID)
    }

    fn prob_ids(&self, history: &[u32], word: u32) -> f64 {
        let n = history.len() + 1;
        let d = self.params.discount;
        let lower = if n == 1 {
            1.0 / self.predictable_count()
        } else {
            self.prob_ids(&history[1..], word)
        };
        let Some(ctx) = self.contexts[n - 1].get(history) else {
            return lower;
        };
        let mut gram = history.to_vec();
        gram.push(word);
        let c = self.counts[n - 1].get(&gram).copied().unwrap_or(0.0);
        ((c - d).max(0.0) + d * ctx.distinct * lower) / ctx.total
    }

    /// `p(word | context)`; only the last `order - 1` context words are used.
    /// Missing history is padded with `<s>`.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let h = self.params.order - 1;
        let mut history = vec![BOS_ID; h.saturating_sub(context.len())];
        let start = context.len().saturating_sub(h);
        history.extend(context[start..].iter().map(|w| self.id(w)));
        self.prob_ids(&history, self.id(word))
    }

    /// Total probability mass over the predictable vocabulary after `context`.
    pub fn context_mass(&self, context: &[&str]) -> f64 {
        self.predictable().map(|w| self.prob(context, w)).sum()
    }

    /// Histories observed in training at every order, for normalization checks.
    pub fn observed_contexts(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = self
            .contexts
            .iter()
            .flat_map(|ctx| ctx.keys())
            .map(|h| h.iter().map(|&i| self.words[i as usize].clone()).collect())
            .collect();
        out.sort();
        out
    }

    /// Sum of natural-log probabilities and the number of predicted tokens
    /// (including `</s>`) for one sentence.
    pub fn sentence_logprob(&self, tokens: &[String]) -> Result<(f64, usize)> {
        let order = self.params.order;
        let seq = padded(tokens.iter().map(|t| self.id(t)), order);
        let mut total = 0.0;
        for gram in seq.windows(order) {
            let p = self.prob_ids(&gram[..order - 1], gram[order - 1]);
            if !(p > 0.0) {
                return Err(Error::Input(format!(
                    "zero probability for {:?}",
                    self.words[gram[order - 1] as usize]
                )));
            }
            total += p.ln();
        }
        Ok((total, seq.len() - (order - 1)))
    }

    pub fn perplexity(&self, sentences: &[Vec<String>]) -> Result<f64> {
        if sentences.is_empty() {
            return Err(Error::Input("no sentences to score".into()));
        }
        let mut log_sum = 0.0;
        let mut tokens = 0usize;
        for s in sentences {
            let (lp, n) = self.sentence_logprob(s)?;
            log_sum += lp;
            tokens += n;
        }
        Ok((-log_sum / tokens as f64).exp())
    }
}

pub fn perplexity(lm: &NGramLM, sentences: &[Vec<String>]) -> Result<f64> {
    lm.perplexity(sentences)
}
