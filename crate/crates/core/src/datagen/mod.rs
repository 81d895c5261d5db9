//! Pretraining data synthesis: KBA term replacement plus the Mask, Switch and
//! Delete denoising tasks, packaged into evenly mixed batches.

mod batch;
mod kba;
mod noise;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Style};
use crate::error::{Error, Result};
use crate::term_graph::TerminologyGraph;

pub use self::batch::{make_batches, Batch, BatchStream};
pub use self::kba::{gen_kba, KbaMatcher, Replacement};
pub use self::noise::{gen_delete, gen_mask, gen_switch, mask_positions, noise_count, MASK_TOKEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskTag {
    Kba,
    Mask,
    Switch,
    Delete,
}

impl TaskTag {
    pub const ALL: [TaskTag; 4] = [TaskTag::Kba, TaskTag::Mask, TaskTag::Switch, TaskTag::Delete];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskTag::Kba => "kba",
            TaskTag::Mask => "mask",
            TaskTag::Switch => "switch",
            TaskTag::Delete => "delete",
        }
    }
}

/// A corrupted input and the sentence it must be reconstructed into.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub task: TaskTag,
    pub style: Style,
    pub source_id: String,
    pub input: Vec<String>,
    pub target: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Fraction of tokens affected, in (0, 1).
    pub rate: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams { rate: 0.15, seed: 0 }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if self.rate > 0.0 && self.rate < 1.0 {
            Ok(())
        } else {
            Err(Error::Param(format!("noise rate {} is outside (0, 1)", self.rate)))
        }
    }
}

/// The four task datasets, each in corpus order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PretrainingSet {
    pub kba: Vec<TrainingPair>,
    pub mask: Vec<TrainingPair>,
    pub switch: Vec<TrainingPair>,
    pub delete: Vec<TrainingPair>,
}

impl PretrainingSet {
    pub fn get(&self, task: TaskTag) -> &[TrainingPair] {
        match task {
            TaskTag::Kba => &self.kba,
            TaskTag::Mask => &self.mask,
            TaskTag::Switch => &self.switch,
            TaskTag::Delete => &self.delete,
        }
    }

    pub fn manifest(&self) -> DataManifest {
        let mut counts = BTreeMap::new();
        let mut per_style = BTreeMap::new();
        for task in TaskTag::ALL {
            let pairs = self.get(task);
            counts.insert(task, pairs.len());
            let mut styles = BTreeMap::new();
            for style in Style::ALL {
                styles.insert(style, pairs.iter().filter(|p| p.style == style).count());
            }
            per_style.insert(task, styles);
        }
        DataManifest {
            counts,
            per_style,
            warnings: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DataManifest {
    pub counts: BTreeMap<TaskTag, usize>,
    pub per_style: BTreeMap<TaskTag, BTreeMap<Style, usize>>,
    pub warnings: Vec<String>,
}

/// Generates all four task datasets. Mask and Switch yield one pair per
/// sentence, Delete one per sentence of two or more tokens, KBA one per
/// sentence containing a graph term of its own style.
pub fn build_pretraining_set(
    corpus: &Corpus,
    graph: &TerminologyGraph,
    params: &NoiseParams,
) -> Result<(PretrainingSet, DataManifest)> {
    params.validate()?;
    let sentences = &corpus.sentences;
    let set = PretrainingSet {
        kba: gen_kba(corpus, graph),
        mask: sentences.par_iter().map(|s| gen_mask(s, params)).collect(),
        switch: sentences.par_iter().map(|s| gen_switch(s, params)).collect(),
        delete: sentences.par_iter().filter_map(|s| gen_delete(s, params)).collect(),
    };
    let mut manifest = set.manifest();
    if graph.is_empty() {
        let msg = "terminology graph is empty; no KBA pairs generated".to_string();
        log::warn!("{msg}");
        manifest.warnings.push(msg);
    }
    Ok((set, manifest))
}

pub fn write_pairs<W: Write>(pairs: &[TrainingPair], mut out: W) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_pairs(pairs: &[TrainingPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_pairs(pairs, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
