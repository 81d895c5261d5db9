//! Style-labeled, concept-annotated sentence corpora.
//!
//! Corpora are stored as JSONL, one sentence per line:
//!
//! ```text
//! {"id": "s1", "style": "expert", "tokens": ["dyspnea", "."], "concepts": [{"cui": "C0013404", "start": 0, "end": 1, "surface": "dyspnea"}]}
//! ```
//!
//! A record may carry `"text"` instead of `"tokens"`, in which case the text
//! is run through [`tokenize`]. When both are present `"text"` is ignored.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Expert,
    Layman,
}

impl Style {
    pub const ALL: [Style; 2] = [Style::Expert, Style::Layman];

    pub fn opposite(self) -> Style {
        match self {
            Style::Expert => Style::Layman,
            Style::Layman => Style::Expert,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Style::Expert => "expert",
            Style::Layman => "layman",
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expert" => Ok(Style::Expert),
            "layman" => Ok(Style::Layman),
            other => Err(Error::Input(format!(
                "unknown style {other:?} (expected \"expert\" or \"layman\")"
            ))),
        }
    }
}

/// A concept mention covering tokens `[start, end)` of its sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptSpan {
    pub cui: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub style: Style,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub concepts: Vec<ConceptSpan>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, style: Style, tokens: Vec<String>) -> Self {
        Sentence {
            id: id.into(),
            style,
            tokens,
            concepts: Vec::new(),
        }
    }

    /// Builds a sentence from raw text using the default tokenizer.
    pub fn from_text(id: impl Into<String>, style: Style, text: &str) -> Self {
        Sentence::new(id, style, tokenize(text))
    }

    pub fn with_concept(mut self, cui: impl Into<String>, start: usize, end: usize) -> Self {
        let surface = self.tokens[start..end].join(" ");
        self.concepts.push(ConceptSpan {
            cui: cui.into(),
            start,
            end,
            surface,
        });
        self
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    /// Checks token and span invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| {
            Err(Error::InvalidSentence {
                id: self.id.clone(),
                message,
            })
        };
        if self.tokens.is_empty() {
            return fail("sentence has no tokens".into());
        }
        if let Some(t) = self.tokens.iter().find(|t| t.is_empty()) {
            return fail(format!("empty token {t:?}"));
        }
        let n = self.tokens.len();
        let mut spans: Vec<&ConceptSpan> = self.concepts.iter().collect();
        spans.sort_by_key(|s| (s.start, s.end));
        for span in &spans {
            if span.start >= span.end || span.end > n {
                return fail(format!(
                    "concept {} has invalid span [{}, {}) for {} tokens",
                    span.cui, span.start, span.end, n
                ));
            }
            let joined = self.tokens[span.start..span.end].join(" ");
            if joined != span.surface {
                return fail(format!(
                    "concept {} surface {:?} does not match tokens {:?}",
                    span.cui, span.surface, joined
                ));
            }
        }
        for pair in spans.windows(2) {
            if pair[1].start < pair[0].end {
                return fail(format!(
                    "concepts {} and {} overlap",
                    pair[0].cui, pair[1].cui
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub provenance: String,
}

impl Corpus {
    /// Builds a corpus, validating every sentence and id uniqueness.
    pub fn new(sentences: Vec<Sentence>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sentences.len());
        for s in &sentences {
            s.validate()?;
            if !seen.insert(s.id.as_str()) {
                return Err(Error::InvalidSentence {
                    id: s.id.clone(),
                    message: "duplicate id".into(),
                });
            }
        }
        Ok(Corpus {
            sentences,
            provenance: String::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn by_style(&self, style: Style) -> impl Iterator<Item = &Sentence> {
        self.sentences.iter().filter(move |s| s.style == style)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    style: Style,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    concepts: Vec<ConceptSpan>,
}

/// Loads a JSONL corpus. Every failure names the offending line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sentences = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| Error::schema(path, lineno, e.to_string()))?;
        let tokens = match (raw.tokens, raw.text) {
            (Some(tokens), _) => tokens,
            (None, Some(text)) => tokenize(&text),
            (None, None) => {
                return Err(Error::schema(
                    path,
                    lineno,
                    "record has neither \"tokens\" nor \"text\"",
                ))
            }
        };
        let sentence = Sentence {
            id: raw.id,
            style: raw.style,
            tokens,
            concepts: raw.concepts,
        };
        sentence
            .validate()
            .map_err(|e| Error::schema(path, lineno, e.to_string()))?;
        if !seen.insert(sentence.id.clone()) {
            return Err(Error::schema(
                path,
                lineno,
                format!("duplicate sentence id {:?}", sentence.id),
            ));
        }
        sentences.push(sentence);
    }
    Ok(Corpus {
        sentences,
        provenance: path.display().to_string(),
    })
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for s in &corpus.sentences {
        let line = serde_json::to_string(s).expect("sentence serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsReport {
    pub sentences: usize,
    pub expert: usize,
    pub layman: usize,
    /// layman / expert, rounded to two decimals; absent without expert sentences.
    pub ratio: Option<f64>,
    pub concepts: usize,
    pub distinct_cuis: usize,
}

impl StatsReport {
    pub fn from_counts(expert: usize, layman: usize, concepts: usize, distinct_cuis: usize) -> Self {
        let ratio = (expert > 0).then(|| (layman as f64 / expert as f64 * 100.0).round() / 100.0);
        StatsReport {
            sentences: expert + layman,
            expert,
            layman,
            ratio,
            concepts,
            distinct_cuis,
        }
    }
}

pub fn corpus_stats(corpus: &Corpus) -> StatsReport {
    let mut expert = 0;
    let mut layman = 0;
    let mut concepts = 0;
    let mut cuis = BTreeSet::new();
    for s in &corpus.sentences {
        match s.style {
            Style::Expert => expert += 1,
            Style::Layman => layman += 1,
        }
        concepts += s.concepts.len();
        cuis.extend(s.concepts.iter().map(|c| c.cui.as_str()));
    }
    StatsReport::from_counts(expert, layman, concepts, cuis.len())
}

/// Turns raw text into tokens.
pub trait Tokenizer {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// Lowercasing whitespace tokenizer that detaches punctuation.
///
/// Every non-alphanumeric, non-space character becomes its own token, except
/// `-`, `'`, `.` and `/` when flanked by alphanumerics on both sides
/// (`kidney-related`, `don't`, `3.5`, `and/or` stay whole).
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpleTokenizer;

fn is_connector(c: char) -> bool {
    matches!(c, '-' | '\'' | '.' | '/')
}

impl Tokenizer for SimpleTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut tokens = Vec::new();
        for word in text.split_whitespace() {
            let chars: Vec<char> = word.chars().collect();
            let mut current = String::new();
            for (i, &c) in chars.iter().enumerate() {
                if c.is_alphanumeric() {
                    current.extend(c.to_lowercase());
                    continue;
                }
                let joined = is_connector(c)
                    && i > 0
                    && chars[i - 1].is_alphanumeric()
                    && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
                if joined {
                    current.push(c);
                } else {
                    if !current.is_empty() {
                        tokens.push(std::mem::take(&mut current));
                    }
                    tokens.push(c.to_string());
                }
            }
            if !current.is_empty() {
                tokens.push(current);
            }
        }
        tokens
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    SimpleTokenizer.tokenize(text)
}

/// Normalizes a phrase: tokenized, then joined with single spaces.
pub fn normalize_phrase(text: &str) -> String {
    tokenize(text).join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Fluid accumulation in the lungs ."),
            toks(&["fluid", "accumulation", "in", "the", "lungs", "."])
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t ").is_empty());
        assert_eq!(
            tokenize("dyspnea, and crackles"),
            toks(&["dyspnea", ",", "and", "crackles"])
        );
        assert_eq!(
            tokenize("Kidney-related (renal) disease."),
            toks(&["kidney-related", "(", "renal", ")", "disease", "."])
        );
        assert_eq!(tokenize("a--b"), toks(&["a", "-", "-", "b"]));
        assert_eq!(tokenize("dose 3.5mg..."), toks(&["dose", "3.5mg", ".", ".", "."]));
    }

    #[test]
    fn stats_ratio_from_reported_counts() {
        let r = StatsReport::from_counts(130_349, 114_674, 0, 0);
        assert_eq!(r.ratio, Some(0.88));
        assert_eq!(r.sentences, 245_023);
    }

    #[test]
    fn stats_empty() {
        let r = corpus_stats(&Corpus::default());
        assert_eq!(r, StatsReport::from_counts(0, 0, 0, 0));
        assert_eq!(r.ratio, None);
    }

    #[test]
    fn stats_counts_distinct_cuis() {
        // 10 sentences, CUIs C1 (x3), C2 (x2), C3 (x1) spread over both styles.
        let mut sentences = Vec::new();
        let cuis = [Some("C1"), Some("C2"), None, Some("C1"), None, Some("C3"), None, Some("C1"), Some("C2"), None];
        for (i, cui) in cuis.iter().enumerate() {
            let style = if i % 2 == 0 { Style::Expert } else { Style::Layman };
            let mut s = Sentence::from_text(format!("s{i}"), style, "the term appears here");
            if let Some(c) = cui {
                s = s.with_concept(*c, 1, 2);
            }
            sentences.push(s);
        }
        let report = corpus_stats(&Corpus::new(sentences).unwrap());
        assert_eq!(report.expert, 5);
        assert_eq!(report.layman, 5);
        assert_eq!(report.concepts, 6);
        assert_eq!(report.distinct_cuis, 3);
        assert_eq!(report.ratio, Some(1.0));
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn load_two_records() {
        let f = write_lines(&[
            r#"{"id":"a","style":"expert","tokens":["dyspnea","."],"concepts":[{"cui":"C0013404","start":0,"end":1,"surface":"dyspnea"}]}"#,
            r#"{"id":"b","style":"layman","text":"Shortness of breath."}"#,
        ]);
        let c = load_corpus(f.path()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.sentences[1].tokens, toks(&["shortness", "of", "breath", "."]));
        assert_eq!(c.sentences[0].concepts[0].cui, "C0013404");
    }

    #[test]
    fn tokens_take_precedence_over_text() {
        let f = write_lines(&[r#"{"id":"a","style":"expert","tokens":["x"],"text":"ignored words"}"#]);
        assert_eq!(load_corpus(f.path()).unwrap().sentences[0].tokens, toks(&["x"]));
    }

    fn schema_line(lines: &[&str]) -> usize {
        let f = write_lines(lines);
        match load_corpus(f.path()) {
            Err(Error::Schema { line, .. }) => line,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_the_line() {
        let good = r#"{"id":"a","style":"expert","tokens":["x"]}"#;
        assert_eq!(
            schema_line(&[good, r#"{"id":"b","style":"layman","tokens":["x","y"],"concepts":[{"cui":"C1","start":1,"end":3,"surface":"y"}]}"#]),
            2
        );
        assert_eq!(schema_line(&[r#"{"id":"a","style":"novice","tokens":["x"]}"#]), 1);
        assert_eq!(schema_line(&[good, good]), 2);
        assert_eq!(schema_line(&[r#"{"style":"expert","tokens":["x"]}"#]), 1);
        assert_eq!(schema_line(&[good, "", r#"{"id":"c","style":"expert"}"#]), 3);
        assert_eq!(schema_line(&[r#"{"id":"a","style":"expert","tokens":[]}"#]), 1);
        assert_eq!(
            schema_line(&[r#"{"id":"a","style":"expert","tokens":["a","b"],"concepts":[{"cui":"C1","start":0,"end":1,"surface":"b"}]}"#]),
            1
        );
        assert_eq!(
            schema_line(&[r#"{"id":"a","style":"expert","tokens":["a","b","c"],"concepts":[{"cui":"C1","start":0,"end":2,"surface":"a b"},{"cui":"C2","start":1,"end":3,"surface":"b c"}]}"#]),
            1
        );
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_corpus("/nonexistent/corpus.jsonl"), Err(Error::Io { .. })));
    }
}
