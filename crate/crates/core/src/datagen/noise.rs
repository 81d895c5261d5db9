//! Token-level denoising corruptions: Mask, Switch and Delete.
//!
//! Each generator draws from its own ChaCha stream derived from
//! `(seed, task, sentence id)`, so a pair depends only on its sentence and
//! parameters, never on corpus order.

use rand::seq::{index, SliceRandom};
use rand_chacha::ChaCha8Rng;

use super::{NoiseParams, TaskTag, TrainingPair};
use crate::corpus::Sentence;
use crate::seed;

pub const MASK_TOKEN: &str = "<MASK>";

/// Number of affected tokens: `max(1, round_half_up(rate * n))`, capped at `n`.
pub fn noise_count(rate: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    // The epsilon keeps exact halves (0.15 * 10) from rounding down on representation error.
    let k = (rate * n as f64 + 0.5 + 1e-9).floor() as usize;
    k.clamp(1, n)
}

fn stream(params: &NoiseParams, task: TaskTag, sentence: &Sentence) -> ChaCha8Rng {
    let label = format!("{}\u{1f}{}", task.as_str(), sentence.id);
    seed::rng_for(params.seed, &label)
}

/// Positions chosen uniformly without replacement, in ascending order.
fn choose_positions(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut positions = index::sample(rng, n, k).into_vec();
    positions.sort_unstable();
    positions
}

fn pair(task: TaskTag, sentence: &Sentence, input: Vec<String>) -> TrainingPair {
    TrainingPair {
        task,
        style: sentence.style,
        source_id: sentence.id.clone(),
        input,
        target: sentence.tokens.clone(),
    }
}

/// Positions that [`gen_mask`] replaces, exposed for inspection.
pub fn mask_positions(sentence: &Sentence, params: &NoiseParams) -> Vec<usize> {
    let n = sentence.tokens.len();
    let mut rng = stream(params, TaskTag::Mask, sentence);
    choose_positions(&mut rng, n, noise_count(params.rate, n))
}

pub fn gen_mask(sentence: &Sentence, params: &NoiseParams) -> TrainingPair {
    let mut input = sentence.tokens.clone();
    for p in mask_positions(sentence, params) {
        input[p] = MASK_TOKEN.to_string();
    }
    pair(TaskTag::Mask, sentence, input)
}

/// Shuffles the tokens at `k` selected positions among themselves.
pub fn gen_switch(sentence: &Sentence, params: &NoiseParams) -> TrainingPair {
    let n = sentence.tokens.len();
    let mut rng = stream(params, TaskTag::Switch, sentence);
    let positions = choose_positions(&mut rng, n, noise_count(params.rate, n));
    let mut selected: Vec<String> = positions.iter().map(|&p| sentence.tokens[p].clone()).collect();
    selected.shuffle(&mut rng);
    let mut input = sentence.tokens.clone();
    for (&p, tok) in positions.iter().zip(selected) {
        input[p] = tok;
    }
    pair(TaskTag::Switch, sentence, input)
}

/// Deletes `k` tokens; sentences shorter than two tokens are skipped.
pub fn gen_delete(sentence: &Sentence, params: &NoiseParams) -> Option<TrainingPair> {
    let n = sentence.tokens.len();
    if n < 2 {
        return None;
    }
    let mut rng = stream(params, TaskTag::Delete, sentence);
    let k = noise_count(params.rate, n).min(n - 1);
    let deleted = choose_positions(&mut rng, n, k);
    let mut next = deleted.iter().peekable();
    let mut input = Vec::with_capacity(n - k);
    for (i, tok) in sentence.tokens.iter().enumerate() {
        if next.peek() == Some(&&i) {
            next.next();
        } else {
            input.push(tok.clone());
        }
    }
    Some(pair(TaskTag::Delete, sentence, input))
}
