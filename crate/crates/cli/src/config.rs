//! Pipeline configuration file.
//!
//! One TOML file describes inputs, outputs and every tunable parameter;
//! command-line flags override individual values. Relative paths are
//! resolved against the directory containing the config file.

use std::path::{Path, PathBuf};

use anyhow::Context;
use medstyle_core::eval::{ClassifierParams, LmParams};
use medstyle_core::{MarginParams, RefineParams, Style};
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub expert_embeddings: Option<PathBuf>,
    pub layman_embeddings: Option<PathBuf>,
    pub hypotheses: Option<PathBuf>,
    pub references: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub systems: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub noise_rate: f64,
    pub batch_size: usize,
    /// Generate knowledge-base assimilation pairs (requires a graph).
    pub kba: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            noise_rate: 0.15,
            batch_size: 64,
            kba: true,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MiningConfig {
    pub k: usize,
    pub threshold: f64,
    /// Embed the corpus with the built-in toy embedder at this dimension
    /// instead of reading embedding files.
    pub toy_embed: Option<usize>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        let p = MarginParams::default();
        MiningConfig {
            k: p.k,
            threshold: p.threshold,
            toy_embed: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Style the hypotheses are meant to be in, for style accuracy.
    pub target_style: Option<Style>,
    pub lm_order: usize,
    pub lm_discount: f64,
    pub unk_singletons: bool,
    pub classifier_epochs: usize,
    pub classifier_learning_rate: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let lm = LmParams::default();
        let clf = ClassifierParams::default();
        EvalConfig {
            target_style: None,
            lm_order: lm.order,
            lm_discount: lm.discount,
            unk_singletons: lm.unk_singletons,
            classifier_epochs: clf.epochs,
            classifier_learning_rate: clf.learning_rate,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub out: PathBuf,
    pub paths: Paths,
    pub graph: RefineParams,
    pub data: DataConfig,
    pub mining: MiningConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            threads: 0,
            out: PathBuf::from("out"),
            paths: Paths::default(),
            graph: RefineParams::default(),
            data: DataConfig::default(),
            mining: MiningConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve(base);
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        let p = &mut self.paths;
        for path in [
            &mut p.corpus,
            &mut p.graph,
            &mut p.expert_embeddings,
            &mut p.layman_embeddings,
            &mut p.hypotheses,
            &mut p.references,
            &mut p.ratings,
            &mut p.systems,
        ]
        .into_iter()
        .flatten()
        {
            fix(path);
        }
    }

    pub fn margin(&self) -> MarginParams {
        MarginParams {
            k: self.mining.k,
            threshold: self.mining.threshold,
        }
    }

    pub fn lm(&self) -> LmParams {
        LmParams {
            order: self.eval.lm_order,
            discount: self.eval.lm_discount,
            unk_singletons: self.eval.unk_singletons,
        }
    }

    pub fn classifier(&self) -> ClassifierParams {
        ClassifierParams {
            epochs: self.eval.classifier_epochs,
            learning_rate: self.eval.classifier_learning_rate,
            seed: medstyle_core::seed::derive(self.seed, "classifier"),
        }
    }
}
