//! Linear expert/layman style classifier over hashed word 1-2-grams.
//!
//! Trained with stochastic gradient descent on the logistic loss; the
//! returned weights are the average over all updates, which makes the model
//! much less sensitive to the order of the last few examples.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Style};
use crate::error::{Error, Result};
use crate::seed::{rng_for, stable_hash};

pub const FEATURE_BITS: u32 = 18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            epochs: 5,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StyleClassifier {
    weights: Vec<f64>,
    bias: f64,
    seed: u64,
}

/// Hashed feature indices with L2-normalized unit values.
fn features(tokens: &[String], seed: u64) -> (Vec<usize>, f64) {
    let mask = (1u64 << FEATURE_BITS) - 1;
    let mut idx: Vec<usize> = tokens
        .iter()
        .map(|t| (stable_hash(seed, t.as_bytes()) & mask) as usize)
        .collect();
    for pair in tokens.windows(2) {
        let key = format!("{}\u{1f}{}", pair[0], pair[1]);
        idx.push((stable_hash(seed, key.as_bytes()) & mask) as usize);
    }
    let value = if idx.is_empty() { 0.0 } else { 1.0 / (idx.len() as f64).sqrt() };
    (idx, value)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Trains on every sentence of a corpus, labelled with its own style.
pub fn train_style_classifier(corpus: &Corpus, params: ClassifierParams) -> Result<StyleClassifier> {
    let sentences: Vec<Vec<String>> = corpus.sentences.iter().map(|s| s.tokens.clone()).collect();
    let styles: Vec<Style> = corpus.sentences.iter().map(|s| s.style).collect();
    train_on_tokens(&sentences, &styles, params)
}

/// Trains on parallel token and label lists.
pub fn train_on_tokens(
    sentences: &[Vec<String>],
    styles: &[Style],
    params: ClassifierParams,
) -> Result<StyleClassifier> {
    if sentences.len() != styles.len() {
        return Err(Error::Input(format!(
            "{} sentences but {} style labels",
            sentences.len(),
            styles.len()
        )));
    }
    if !styles.contains(&Style::Expert) || !styles.contains(&Style::Layman) {
        return Err(Error::Input("style classifier needs examples of both styles".into()));
    }
    if params.epochs == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::Param("classifier needs at least one epoch and a positive learning rate".into()));
    }

    let dim = 1usize << FEATURE_BITS;
    let examples: Vec<(Vec<usize>, f64, f64)> = sentences
        .iter()
        .zip(styles)
        .map(|(s, &style)| {
            let (idx, v) = features(s, params.seed);
            (idx, v, if style == Style::Expert { 1.0 } else { 0.0 })
        })
        .collect();

    // Averaged SGD via the running-sum trick: avg = w - u / t.
    let mut w = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let (mut b, mut ub) = (0.0, 0.0);
    let mut t = 1.0f64;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = rng_for(params.seed, "style-classifier");
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (idx, v, y) = &examples[i];
            let z = b + idx.iter().map(|&j| w[j] * v).sum::<f64>();
            let g = params.learning_rate * (y - sigmoid(z));
            for &j in idx {
                w[j] += g * v;
                u[j] += t * g * v;
            }
            b += g;
            ub += t * g;
            t += 1.0;
        }
    }
    let weights = w.iter().zip(&u).map(|(w, u)| w - u / t).collect();
    Ok(StyleClassifier {
        weights,
        bias: b - ub / t,
        seed: params.seed,
    })
}

impl StyleClassifier {
    fn logit(&self, tokens: &[String]) -> f64 {
        let (idx, v) = features(tokens, self.seed);
        self.bias + idx.iter().map(|&j| self.weights[j] * v).sum::<f64>()
    }

    /// Probability that the sentence is in the expert style.
    pub fn expert_probability(&self, tokens: &[String]) -> f64 {
        sigmoid(self.logit(tokens))
    }

    /// Class scores `[expert, layman]`; their softmax is the model's posterior.
    pub fn class_scores(&self, tokens: &[String]) -> [f64; 2] {
        let z = self.logit(tokens) / 2.0;
        [z, -z]
    }

    /// Argmax of the class scores; ties go to expert.
    pub fn classify(&self, tokens: &[String]) -> Style {
        let [expert, layman] = self.class_scores(tokens);
        if expert >= layman {
            Style::Expert
        } else {
            Style::Layman
        }
    }
}

/// Fraction of sentences classified as their intended style.
pub fn style_accuracy(classifier: &StyleClassifier, sentences: &[Vec<String>], intended: &[Style]) -> Result<f64> {
    if sentences.is_empty() {
        return Err(Error::Input("no sentences to classify".into()));
    }
    if sentences.len() != intended.len() {
        return Err(Error::Input(format!(
            "{} sentences but {} intended styles",
            sentences.len(),
            intended.len()
        )));
    }
    let hits = sentences
        .iter()
        .zip(intended)
        .filter(|(s, &style)| classifier.classify(s) == style)
        .count();
    Ok(hits as f64 / sentences.len() as f64)
}
