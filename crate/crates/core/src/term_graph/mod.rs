//! Terminology bijective graph: one expert/layman phrase pair per concept.
//!
//! Construction runs in three stages:
//!
//! 1. [`collect_candidates`] gathers, for every CUI annotated in both styles,
//!    the surface forms seen on each side with their sentence frequencies.
//! 2. [`majority_vote`] picks the most frequent surface per side.
//! 3. [`refine_edges`] drops identical pairs, pairs closer than the
//!    Levenshtein threshold, and surfaces claimed by more than one concept.

mod io;
mod levenshtein;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_phrase, Corpus, Style};
use crate::error::{Error, Result};

pub use self::io::{load_graph, read_graph, save_graph, write_graph, GRAPH_HEADER};
pub use self::levenshtein::levenshtein;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseCandidate {
    pub cui: String,
    pub surface: String,
    pub style: Style,
    /// Number of sentences of `style` in which `surface` is annotated with `cui`.
    pub frequency: usize,
}

/// Candidates for one concept, each side sorted by surface.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConceptCandidates {
    pub expert: Vec<PhraseCandidate>,
    pub layman: Vec<PhraseCandidate>,
}

impl ConceptCandidates {
    pub fn side(&self, style: Style) -> &[PhraseCandidate] {
        match style {
            Style::Expert => &self.expert,
            Style::Layman => &self.layman,
        }
    }
}

/// Collects per-style phrase candidates for every CUI present in both styles.
pub fn collect_candidates(corpus: &Corpus) -> BTreeMap<String, ConceptCandidates> {
    // (cui, style, surface) -> sentence count
    let mut counts: BTreeMap<(String, Style, String), usize> = BTreeMap::new();
    for sentence in &corpus.sentences {
        let mut seen = HashSet::new();
        for span in &sentence.concepts {
            let surface = normalize_phrase(&span.surface);
            if surface.is_empty() {
                continue;
            }
            if seen.insert((span.cui.as_str(), surface.clone())) {
                *counts
                    .entry((span.cui.clone(), sentence.style, surface))
                    .or_default() += 1;
            }
        }
    }

    let mut by_cui: BTreeMap<String, ConceptCandidates> = BTreeMap::new();
    for ((cui, style, surface), frequency) in counts {
        let entry = by_cui.entry(cui.clone()).or_default();
        let candidate = PhraseCandidate {
            cui,
            surface,
            style,
            frequency,
        };
        match style {
            Style::Expert => entry.expert.push(candidate),
            Style::Layman => entry.layman.push(candidate),
        }
    }
    by_cui.retain(|_, c| !c.expert.is_empty() && !c.layman.is_empty());
    by_cui
}

/// The winning surface on each side of one concept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VotedPair {
    pub cui: String,
    pub expert_term: String,
    pub expert_frequency: usize,
    pub layman_term: String,
    pub layman_frequency: usize,
}

fn vote_side(side: &[PhraseCandidate]) -> Option<&PhraseCandidate> {
    // Highest frequency; among equals the lexicographically smallest surface.
    side.iter().min_by(|a, b| {
        b.frequency
            .cmp(&a.frequency)
            .then_with(|| a.surface.cmp(&b.surface))
    })
}

/// Selects the most frequent surface per style. `None` when a side is empty.
pub fn majority_vote(candidates: &ConceptCandidates) -> Option<VotedPair> {
    let expert = vote_side(&candidates.expert)?;
    let layman = vote_side(&candidates.layman)?;
    Some(VotedPair {
        cui: expert.cui.clone(),
        expert_term: expert.surface.clone(),
        expert_frequency: expert.frequency,
        layman_term: layman.surface.clone(),
        layman_frequency: layman.frequency,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineParams {
    /// Pairs with edit distance below this are treated as spelling variants.
    pub d: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams { d: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermEdge {
    pub cui: String,
    pub expert_term: String,
    pub layman_term: String,
}

impl TermEdge {
    pub fn new(cui: impl Into<String>, expert: impl Into<String>, layman: impl Into<String>) -> Self {
        TermEdge {
            cui: cui.into(),
            expert_term: expert.into(),
            layman_term: layman.into(),
        }
    }

    pub fn term(&self, style: Style) -> &str {
        match style {
            Style::Expert => &self.expert_term,
            Style::Layman => &self.layman_term,
        }
    }
}

/// Refined expert/layman edges with lookup by either surface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TerminologyGraph {
    edges: Vec<TermEdge>,
    by_expert: HashMap<String, usize>,
    by_layman: HashMap<String, usize>,
}

impl TerminologyGraph {
    /// Builds an indexed graph, rejecting any edge set that violates the
    /// one-edge-per-CUI, one-edge-per-surface or distance invariants.
    pub fn from_edges(mut edges: Vec<TermEdge>, params: RefineParams) -> Result<Self> {
        edges.sort();
        let mut problems = Vec::new();
        let mut cuis = HashSet::new();
        let mut by_expert = HashMap::new();
        let mut by_layman = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            if !cuis.insert(e.cui.as_str()) {
                problems.push(format!("duplicate CUI {}", e.cui));
            }
            if e.expert_term.is_empty() || e.layman_term.is_empty() {
                problems.push(format!("{}: empty term", e.cui));
            }
            if e.expert_term == e.layman_term {
                problems.push(format!("{}: identical terms {:?}", e.cui, e.expert_term));
            } else {
                let dist = levenshtein(&e.expert_term, &e.layman_term);
                if dist < params.d {
                    problems.push(format!(
                        "{}: distance {} between {:?} and {:?} is below {}",
                        e.cui, dist, e.expert_term, e.layman_term, params.d
                    ));
                }
            }
            if by_expert.insert(e.expert_term.clone(), i).is_some() {
                problems.push(format!("expert term {:?} used by more than one edge", e.expert_term));
            }
            if by_layman.insert(e.layman_term.clone(), i).is_some() {
                problems.push(format!("layman term {:?} used by more than one edge", e.layman_term));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Graph(problems.join("; ")));
        }
        Ok(TerminologyGraph {
            edges,
            by_expert,
            by_layman,
        })
    }

    pub fn edges(&self) -> &[TermEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Finds the edge whose `style` side is exactly `term`.
    pub fn lookup(&self, style: Style, term: &str) -> Option<&TermEdge> {
        let index = match style {
            Style::Expert => &self.by_expert,
            Style::Layman => &self.by_layman,
        };
        index.get(term).map(|&i| &self.edges[i])
    }

    /// Maps a `from`-style term to its opposite-style counterpart.
    pub fn translate(&self, from: Style, term: &str) -> Option<&str> {
        self.lookup(from, term).map(|e| e.term(from.opposite()))
    }

    pub fn by_cui(&self, cui: &str) -> Option<&TermEdge> {
        self.edges
            .binary_search_by(|e| e.cui.as_str().cmp(cui))
            .ok()
            .map(|i| &self.edges[i])
    }
}

/// Stage counts from graph construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RefineReport {
    pub voted_pairs: usize,
    pub excluded_identical: usize,
    pub excluded_by_distance: usize,
    pub dropped_collisions: usize,
    pub final_edges: usize,
}

/// Keeps voted pairs whose terms differ by at least `params.d` edits, then
/// resolves surfaces claimed by several CUIs in favour of the higher winning
/// frequency (smaller CUI on ties), expert side first.
pub fn refine_edges(voted: &[VotedPair], params: RefineParams) -> (TerminologyGraph, RefineReport) {
    let mut report = RefineReport {
        voted_pairs: voted.len(),
        ..RefineReport::default()
    };
    let mut kept: Vec<&VotedPair> = Vec::new();
    for pair in voted {
        if pair.expert_term == pair.layman_term {
            report.excluded_identical += 1;
        } else if levenshtein(&pair.expert_term, &pair.layman_term) < params.d {
            report.excluded_by_distance += 1;
        } else {
            kept.push(pair);
        }
    }

    let before = kept.len();
    let kept = resolve_collisions(kept, |p| (&p.expert_term, p.expert_frequency));
    let kept = resolve_collisions(kept, |p| (&p.layman_term, p.layman_frequency));
    report.dropped_collisions = before - kept.len();

    let edges: Vec<TermEdge> = kept
        .into_iter()
        .map(|p| TermEdge::new(&p.cui, &p.expert_term, &p.layman_term))
        .collect();
    report.final_edges = edges.len();
    let graph = TerminologyGraph::from_edges(edges, params)
        .expect("refined edges satisfy graph invariants");
    (graph, report)
}

fn resolve_collisions<'a, F>(pairs: Vec<&'a VotedPair>, key: F) -> Vec<&'a VotedPair>
where
    F: Fn(&VotedPair) -> (&String, usize),
{
    let mut winner: HashMap<&String, &VotedPair> = HashMap::new();
    for &p in &pairs {
        let (surface, freq) = key(p);
        winner
            .entry(surface)
            .and_modify(|w| {
                let wf = key(w).1;
                if freq > wf || (freq == wf && p.cui < w.cui) {
                    *w = p;
                }
            })
            .or_insert(p);
    }
    pairs
        .into_iter()
        .filter(|p| std::ptr::eq(winner[key(p).0], *p))
        .collect()
}

/// Stage counts for a full build from a corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub annotated_cuis: usize,
    pub cuis_in_both_styles: usize,
    #[serde(flatten)]
    pub refine: RefineReport,
}

/// Runs candidate collection, voting and refinement.
pub fn build_graph(corpus: &Corpus, params: RefineParams) -> (TerminologyGraph, BuildReport) {
    let annotated: HashSet<&str> = corpus
        .sentences
        .iter()
        .flat_map(|s| s.concepts.iter().map(|c| c.cui.as_str()))
        .collect();
    let candidates = collect_candidates(corpus);
    let voted: Vec<VotedPair> = candidates.values().filter_map(majority_vote).collect();
    let (graph, refine) = refine_edges(&voted, params);
    let report = BuildReport {
        annotated_cuis: annotated.len(),
        cuis_in_both_styles: candidates.len(),
        refine,
    };
    (graph, report)
}
