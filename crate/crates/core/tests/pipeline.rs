//! End-to-end flow over the library API: annotated corpus -> graph ->
//! pretraining data -> batches, and synthetic corpus -> mined pairs.

mod common;

use medstyle_core::corpus::{load_corpus, save_corpus, Style};
use medstyle_core::datagen::{build_pretraining_set, make_batches, NoiseParams, TaskTag};
use medstyle_core::mining::{mine_pairs, toy_embed, MarginParams};
use medstyle_core::synth::{synth_corpus, SynthParams};
use medstyle_core::term_graph::{build_graph, load_graph, save_graph, RefineParams, TerminologyGraph};

#[test]
fn graph_data_and_batches() {
    let corpus = common::graph_fixture_corpus();
    let (graph, _) = build_graph(&corpus, RefineParams::default());

    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("graph.tsv");
    save_graph(&graph, &graph_path).unwrap();
    assert_eq!(load_graph(&graph_path, RefineParams::default()).unwrap(), graph);

    let corpus_path = dir.path().join("corpus.jsonl");
    save_corpus(&corpus, &corpus_path).unwrap();
    let reloaded = load_corpus(&corpus_path).unwrap();
    assert_eq!(reloaded.sentences, corpus.sentences);

    let params = NoiseParams { rate: 0.15, seed: 3 };
    let (set, manifest) = build_pretraining_set(&reloaded, &graph, &params).unwrap();
    assert!(manifest.warnings.is_empty());
    assert_eq!(set.mask.len(), corpus.len());
    assert_eq!(set.switch.len(), corpus.len());
    assert_eq!(set.delete.len(), corpus.len());
    assert!(!set.kba.is_empty() && set.kba.len() < corpus.len());
    for p in &set.kba {
        assert_eq!(p.task, TaskTag::Kba);
        assert_ne!(p.input, p.target);
    }

    // Same seed, same data, regardless of how the corpus was obtained.
    let (again, _) = build_pretraining_set(&corpus, &graph, &params).unwrap();
    assert_eq!(again, set);

    let batches: Vec<_> = make_batches(&set, 8, 3).unwrap().collect();
    let largest = TaskTag::ALL.iter().map(|&t| set.get(t).len()).max().unwrap();
    assert_eq!(batches.len(), largest.div_ceil(2));
    assert!(batches.iter().all(|b| TaskTag::ALL.iter().all(|&t| b.count(t) == 2)));
}

#[test]
fn empty_graph_warns_and_skips_kba() {
    let corpus = common::graph_fixture_corpus();
    let (set, manifest) =
        build_pretraining_set(&corpus, &TerminologyGraph::default(), &NoiseParams::default()).unwrap();
    assert!(set.kba.is_empty());
    assert_eq!(manifest.warnings.len(), 1);
    assert!(make_batches(&set, 4, 0).is_err());
}

#[test]
fn mining_a_synthetic_corpus() {
    let sc = synth_corpus(&SynthParams {
        per_style: 200,
        planted: 20,
        seed: 5,
        ..SynthParams::default()
    })
    .unwrap();
    assert_eq!(sc.corpus.by_style(Style::Layman).count(), 200);
    let (e, l) = toy_embed(&sc.corpus, 64, 5).unwrap();
    let r = mine_pairs(&e, &l, &MarginParams::default()).unwrap();
    let found: Vec<(String, String)> = r.pairs.iter().map(|p| (p.expert_id.clone(), p.layman_id.clone())).collect();
    let hits = sc.planted.iter().filter(|p| found.contains(p)).count();
    assert!(hits >= 18, "{hits} of 20 planted pairs recovered");
}
