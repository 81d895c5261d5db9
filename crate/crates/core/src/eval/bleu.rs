use std::collections::HashMap;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped matches and hypothesis n-gram totals for orders 1..=4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn sentence(hypothesis: &[String], reference: &[String]) -> Self {
        let mut stats = BleuStats {
            hyp_len: hypothesis.len(),
            ref_len: reference.len(),
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let hyp = ngram_counts(hypothesis, n);
            let refs = ngram_counts(reference, n);
            stats.totals[n - 1] = hypothesis.len().saturating_sub(n - 1);
            stats.matches[n - 1] = hyp
                .iter()
                .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }

    fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }

    /// Unsmoothed BLEU: zero as soon as any order has no match.
    pub fn score(&self) -> f64 {
        if self.matches.iter().any(|&m| m == 0) {
            return 0.0;
        }
        let log_sum: f64 = (0..MAX_ORDER)
            .map(|n| (self.matches[n] as f64 / self.totals[n] as f64).ln())
            .sum();
        self.brevity_penalty() * (log_sum / MAX_ORDER as f64).exp()
    }

    /// Add-one smoothing on orders 2..=4.
    pub fn smoothed_score(&self) -> f64 {
        if self.matches[0] == 0 {
            return 0.0;
        }
        let log_sum: f64 = (0..MAX_ORDER)
            .map(|n| {
                let (m, t) = if n == 0 {
                    (self.matches[0] as f64, self.totals[0] as f64)
                } else {
                    (self.matches[n] as f64 + 1.0, self.totals[n] as f64 + 1.0)
                };
                (m / t).ln()
            })
            .sum();
        self.brevity_penalty() * (log_sum / MAX_ORDER as f64).exp()
    }
}

/// Corpus-level BLEU-4 with one reference per hypothesis, in [0, 1].
pub fn bleu4(hypotheses: &[Vec<String>], references: &[Vec<String>]) -> Result<f64> {
    if hypotheses.is_empty() {
        return Err(Error::Input("no hypotheses to score".into()));
    }
    if hypotheses.len() != references.len() {
        return Err(Error::Input(format!(
            "{} hypotheses but {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    let mut total = BleuStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        total.add(&BleuStats::sentence(h, r));
    }
    Ok(total.score())
}

/// Sentence-level BLEU-4 with add-one smoothing of higher orders.
pub fn sentence_bleu(hypothesis: &[String], reference: &[String]) -> f64 {
    BleuStats::sentence(hypothesis, reference).smoothed_score()
}
