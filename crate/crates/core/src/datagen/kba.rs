//! Knowledge-base assimilation pairs: every in-style graph term is swapped for
//! its opposite-style counterpart and the model must restore the original.

use rayon::prelude::*;

use super::{TaskTag, TrainingPair};
use crate::corpus::{normalize_phrase, ConceptSpan, Corpus, Sentence, Style};
use crate::term_graph::TerminologyGraph;

/// One substituted phrase, in source token coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replacement {
    pub start: usize,
    pub end: usize,
    pub cui: String,
    pub from_annotation: bool,
}

/// Phrase matcher over one graph.
pub struct KbaMatcher<'g> {
    graph: &'g TerminologyGraph,
    max_len: [usize; 2],
}

fn side(style: Style) -> usize {
    match style {
        Style::Expert => 0,
        Style::Layman => 1,
    }
}

impl<'g> KbaMatcher<'g> {
    pub fn new(graph: &'g TerminologyGraph) -> Self {
        let mut max_len = [0; 2];
        for e in graph.edges() {
            for style in Style::ALL {
                let n = e.term(style).split(' ').count();
                max_len[side(style)] = max_len[side(style)].max(n);
            }
        }
        KbaMatcher { graph, max_len }
    }

    /// Finds the phrases of `style` to replace. Annotated spans whose surface is
    /// a graph term win; the remaining tokens are scanned left to right with
    /// longest-match-first, non-overlapping string matching.
    pub fn find(&self, tokens: &[String], spans: &[ConceptSpan], style: Style) -> Vec<Replacement> {
        let n = tokens.len();
        let mut covered = vec![false; n];
        let mut found = Vec::new();
        for span in spans {
            if span.end > n || span.start >= span.end {
                continue;
            }
            if let Some(edge) = self.graph.lookup(style, &normalize_phrase(&span.surface)) {
                covered[span.start..span.end].iter_mut().for_each(|c| *c = true);
                found.push(Replacement {
                    start: span.start,
                    end: span.end,
                    cui: edge.cui.clone(),
                    from_annotation: true,
                });
            }
        }

        let max_len = self.max_len[side(style)];
        let mut i = 0;
        while i < n {
            if covered[i] {
                i += 1;
                continue;
            }
            let mut matched = 0;
            let longest = max_len.min(n - i);
            for len in (1..=longest).rev() {
                if covered[i..i + len].iter().any(|&c| c) {
                    continue;
                }
                let phrase = tokens[i..i + len].join(" ").to_lowercase();
                if let Some(edge) = self.graph.lookup(style, &phrase) {
                    found.push(Replacement {
                        start: i,
                        end: i + len,
                        cui: edge.cui.clone(),
                        from_annotation: false,
                    });
                    matched = len;
                    break;
                }
            }
            i += matched.max(1);
        }
        found.sort_by_key(|r| r.start);
        found
    }

    /// Replaces every matched `style` phrase with the opposite-style term.
    pub fn substitute(
        &self,
        tokens: &[String],
        spans: &[ConceptSpan],
        style: Style,
    ) -> (Vec<String>, Vec<Replacement>) {
        let found = self.find(tokens, spans, style);
        let mut out = Vec::with_capacity(tokens.len());
        let mut pos = 0;
        for r in &found {
            out.extend_from_slice(&tokens[pos..r.start]);
            let edge = self.graph.by_cui(&r.cui).expect("matched edge exists");
            out.extend(edge.term(style.opposite()).split(' ').map(String::from));
            pos = r.end;
        }
        out.extend_from_slice(&tokens[pos..]);
        (out, found)
    }

    /// KBA pair for one sentence, or `None` when no graph term occurs in it.
    pub fn pair(&self, sentence: &Sentence) -> Option<TrainingPair> {
        let (input, found) = self.substitute(&sentence.tokens, &sentence.concepts, sentence.style);
        if found.is_empty() {
            return None;
        }
        Some(TrainingPair {
            task: TaskTag::Kba,
            style: sentence.style,
            source_id: sentence.id.clone(),
            input,
            target: sentence.tokens.clone(),
        })
    }
}

pub fn gen_kba(corpus: &Corpus, graph: &TerminologyGraph) -> Vec<TrainingPair> {
    let matcher = KbaMatcher::new(graph);
    corpus
        .sentences
        .par_iter()
        .filter_map(|s| matcher.pair(s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::term_graph::{RefineParams, TermEdge};

    fn graph() -> TerminologyGraph {
        TerminologyGraph::from_edges(
            vec![
                TermEdge::new("C0013404", "dyspnea", "shortness of breath"),
                TermEdge::new("C0035508", "crackles on auscultation", "crackling sounds"),
                TermEdge::new("C0020538", "hypertension", "high blood pressure"),
            ],
            RefineParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn expert_sentence_single_term() {
        let g = graph();
        let s = Sentence::from_text("t4", Style::Expert, "Fluid accumulation in the lungs may cause dyspnea .");
        let p = KbaMatcher::new(&g).pair(&s).unwrap();
        assert_eq!(p.input, tokenize("fluid accumulation in the lungs may cause shortness of breath ."));
        assert_eq!(p.target, s.tokens);
        assert_eq!(p.task, TaskTag::Kba);
    }

    #[test]
    fn two_terms_replaced_in_one_pair() {
        let g = graph();
        let s = Sentence::from_text(
            "t4b",
            Style::Expert,
            "fluid accumulation in the lungs may cause dyspnea and crackles on auscultation .",
        );
        let p = KbaMatcher::new(&g).pair(&s).unwrap();
        assert_eq!(
            p.input,
            tokenize("fluid accumulation in the lungs may cause shortness of breath and crackling sounds .")
        );
    }

    #[test]
    fn no_match_no_pair() {
        let g = graph();
        let s = Sentence::from_text("x", Style::Expert, "the patient was discharged .");
        assert!(KbaMatcher::new(&g).pair(&s).is_none());
        // A layman term in an expert sentence is not on the expert side.
        let s = Sentence::from_text("y", Style::Expert, "shortness of breath occurs .");
        assert!(KbaMatcher::new(&g).pair(&s).is_none());
    }

    #[test]
    fn layman_sentence_maps_to_expert() {
        let g = graph();
        let s = Sentence::from_text("l", Style::Layman, "people with high blood pressure feel fine");
        let p = KbaMatcher::new(&g).pair(&s).unwrap();
        assert_eq!(p.input, tokenize("people with hypertension feel fine"));
    }

    #[test]
    fn annotations_take_precedence() {
        let g = TerminologyGraph::from_edges(
            vec![
                TermEdge::new("C1", "pleural effusion", "fluid around the lungs"),
                TermEdge::new("C2", "effusion", "leaking fluid"),
            ],
            RefineParams::default(),
        )
        .unwrap();
        let m = KbaMatcher::new(&g);
        let plain = Sentence::from_text("a", Style::Expert, "a pleural effusion");
        // String matching takes the longest phrase.
        assert_eq!(m.pair(&plain).unwrap().input, tokenize("a fluid around the lungs"));
        // An annotation on the shorter phrase wins over the longer string match.
        let annotated = plain.clone().with_concept("C2", 2, 3);
        assert_eq!(m.pair(&annotated).unwrap().input, tokenize("a pleural leaking fluid"));
    }

    #[test]
    fn gen_kba_counts_matching_sentences() {
        let g = graph();
        let texts = [
            (Style::Expert, "dyspnea at rest"),
            (Style::Expert, "no complaints"),
            (Style::Layman, "high blood pressure runs in families"),
            (Style::Layman, "drink water"),
            (Style::Expert, "hypertension and dyspnea"),
            (Style::Layman, "dyspnea is a word doctors use"),
            (Style::Expert, "crackles on auscultation were heard"),
            (Style::Layman, "rest well"),
            (Style::Expert, "the chart was updated"),
            (Style::Layman, "ask a nurse"),
        ];
        let sentences = texts
            .iter()
            .enumerate()
            .map(|(i, (st, t))| Sentence::from_text(format!("s{i}"), *st, t))
            .collect();
        let corpus = Corpus::new(sentences).unwrap();
        let pairs = gen_kba(&corpus, &g);
        let ids: Vec<&str> = pairs.iter().map(|p| p.source_id.as_str()).collect();
        assert_eq!(ids, ["s0", "s2", "s4", "s6"]);
    }
}
