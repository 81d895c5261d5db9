use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{RefineParams, TermEdge, TerminologyGraph};
use crate::error::{Error, Result};

pub const GRAPH_HEADER: &str = "cui\texpert_term\tlayman_term";

pub fn write_graph<W: Write>(graph: &TerminologyGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{GRAPH_HEADER}")?;
    for e in graph.edges() {
        writeln!(out, "{}\t{}\t{}", e.cui, e.expert_term, e.layman_term)?;
    }
    out.flush()
}

pub fn save_graph(graph: &TerminologyGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_graph(graph, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses a graph TSV and re-validates every invariant.
pub fn read_graph<R: Read>(input: R, source: &Path, params: RefineParams) -> Result<TerminologyGraph> {
    let mut lines = BufReader::new(input).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end_matches('\r') == GRAPH_HEADER => {}
        Some(Ok(h)) => {
            return Err(Error::schema(
                source,
                1,
                format!("expected header {GRAPH_HEADER:?}, found {h:?}"),
            ))
        }
        Some(Err(e)) => return Err(Error::io(source, e)),
        None => return Err(Error::schema(source, 1, "missing header")),
    }
    let mut edges = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.map_err(|e| Error::io(source, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::schema(
                source,
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        edges.push(TermEdge::new(fields[0], fields[1], fields[2]));
    }
    TerminologyGraph::from_edges(edges, params)
        .map_err(|e| Error::Graph(format!("{}: {e}", source.display())))
}

pub fn load_graph(path: impl AsRef<Path>, params: RefineParams) -> Result<TerminologyGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_graph(file, path, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Style;

    fn parse(text: &str) -> Result<TerminologyGraph> {
        read_graph(text.as_bytes(), Path::new("test.tsv"), RefineParams::default())
    }

    #[test]
    fn round_trip_single_edge() {
        let g = TerminologyGraph::from_edges(
            vec![TermEdge::new("C0013404", "dyspnea", "shortness of breath")],
            RefineParams::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_graph(&g, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "cui\texpert_term\tlayman_term\nC0013404\tdyspnea\tshortness of breath\n"
        );
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), g);
    }

    #[test]
    fn duplicate_cui_is_named() {
        let err = parse("cui\texpert_term\tlayman_term\nC7\trenal\tkidney problem\nC7\tpyrexia\tfever\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("duplicate CUI C7"), "{err}");
    }

    #[test]
    fn distance_violation_rejected() {
        let err = parse("cui\texpert_term\tlayman_term\nC1\tdyspnea\tdyspnoea\n").unwrap_err();
        assert!(err.to_string().contains("distance 1"), "{err}");
    }

    #[test]
    fn bad_header_and_row_shape() {
        assert!(matches!(parse("a\tb\n"), Err(Error::Schema { line: 1, .. })));
        assert!(matches!(
            parse("cui\texpert_term\tlayman_term\nC1\tonly two\n"),
            Err(Error::Schema { line: 2, .. })
        ));
    }

    #[test]
    fn five_edge_fixture_indexes_both_sides() {
        let text = "cui\texpert_term\tlayman_term\n\
            C0013404\tdyspnea\tshortness of breath\n\
            C0020538\thypertension\thigh blood pressure\n\
            C0015967\tpyrexia\tfever\n\
            C0039231\ttachycardia\tfast heartbeat\n\
            C0085593\trigors\tchills\n";
        let g = parse(text).unwrap();
        assert_eq!(g.len(), 5);
        for e in g.edges() {
            assert_eq!(g.lookup(Style::Expert, &e.expert_term), Some(e));
            assert_eq!(g.lookup(Style::Layman, &e.layman_term), Some(e));
        }
        assert_eq!(g.translate(Style::Layman, "fever"), Some("pyrexia"));
    }
}
