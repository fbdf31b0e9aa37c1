//! Flat-file formats: tab-separated triples, node colors and pair colors.
//! Lines starting with `#` and blank lines are skipped, except that the
//! triples-file lines `#node<TAB><name>` and `#relation<TAB><name>` declare a
//! node or relation. Writers emit these declarations so isolated nodes,
//! unused relations and interning order survive a round trip.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{KnowledgeGraph, PairColoring, DEFAULT_NODE_COLOR};
use crate::error::{Error, Result};

const NODE_DIRECTIVE: &str = "#node\t";
const RELATION_DIRECTIVE: &str = "#relation\t";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn records<'a>(
    text: &'a str,
    path: &'a Path,
    arity: usize,
) -> impl Iterator<Item = Result<(usize, Vec<&'a str>)>> + 'a {
    text.lines().enumerate().filter_map(move |(i, raw)| {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            return None;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != arity || fields.iter().any(|f| f.is_empty()) {
            return Some(Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!(
                    "expected {arity} non-empty tab-separated fields, found {}",
                    fields.len()
                ),
            }));
        }
        Some(Ok((i + 1, fields)))
    })
}

/// Loads a graph from a triples file plus optional node-color and pair-color
/// files.
pub fn load_graph(
    triples: &Path,
    node_colors: Option<&Path>,
    pair_colors: Option<&Path>,
) -> Result<KnowledgeGraph> {
    let triples_text = read(triples)?;
    let colors_text = node_colors.map(read).transpose()?;
    let pairs_text = pair_colors.map(read).transpose()?;
    load_graph_inner(
        (&triples_text, triples),
        colors_text.as_deref().zip(node_colors),
        pairs_text.as_deref().zip(pair_colors),
    )
}

/// Same as [`load_graph`] over in-memory contents.
pub fn load_graph_from_str(
    triples: &str,
    node_colors: Option<&str>,
    pair_colors: Option<&str>,
) -> Result<KnowledgeGraph> {
    let triples_path = PathBuf::from("<triples>");
    let colors_path = PathBuf::from("<node-colors>");
    let pairs_path = PathBuf::from("<pair-colors>");
    load_graph_inner(
        (triples, &triples_path),
        node_colors.map(|t| (t, colors_path.as_path())),
        pair_colors.map(|t| (t, pairs_path.as_path())),
    )
}

fn load_graph_inner(
    triples: (&str, &Path),
    node_colors: Option<(&str, &Path)>,
    pair_colors: Option<(&str, &Path)>,
) -> Result<KnowledgeGraph> {
    let mut b = KnowledgeGraph::builder();
    for line in triples.0.lines() {
        let line = line.trim_end_matches('\r');
        if let Some(name) = line.strip_prefix(NODE_DIRECTIVE) {
            if name.is_empty() {
                return Err(Error::Validation("empty node declaration".into()));
            }
            b.add_node(name);
        } else if let Some(name) = line.strip_prefix(RELATION_DIRECTIVE) {
            if name.is_empty() {
                return Err(Error::Validation("empty relation declaration".into()));
            }
            b.add_relation(name);
        }
    }
    for rec in records(triples.0, triples.1, 3) {
        let (_, f) = rec?;
        b.add_fact(f[0], f[1], f[2]);
    }
    let mut g = b.build();

    if let Some((text, path)) = node_colors {
        let mut labels = vec![DEFAULT_NODE_COLOR.to_string(); g.node_count()];
        for rec in records(text, path, 2) {
            let (line, f) = rec?;
            let v = g.node_id(f[0]).map_err(|_| {
                Error::Validation(format!(
                    "{}:{line}: color for unknown node `{}`",
                    path.display(),
                    f[0]
                ))
            })?;
            labels[v] = f[1].to_string();
        }
        g = g.with_node_labels(&labels)?;
    }

    if let Some((text, path)) = pair_colors {
        let n = g.node_count();
        let mut labels: Vec<Option<String>> = vec![None; n * n];
        for rec in records(text, path, 3) {
            let (line, f) = rec?;
            let lookup = |name: &str| {
                g.node_id(name).map_err(|_| {
                    Error::Validation(format!(
                        "{}:{line}: pair color for unknown node `{name}`",
                        path.display()
                    ))
                })
            };
            let (u, v) = (lookup(f[0])?, lookup(f[1])?);
            labels[u * n + v] = Some(f[2].to_string());
        }
        if let Some(missing) = labels.iter().position(Option::is_none) {
            return Err(Error::Validation(format!(
                "{}: pair coloring is not total, missing ({}, {})",
                path.display(),
                g.node_name(missing / n),
                g.node_name(missing % n)
            )));
        }
        let pc = PairColoring::from_fn(n, |u, v| labels[u * n + v].clone().unwrap_or_default());
        g = g.with_pair_coloring(pc)?;
    }
    Ok(g)
}

pub fn write_triples(g: &KnowledgeGraph) -> String {
    let mut out = String::new();
    for name in g.nodes() {
        let _ = writeln!(out, "{NODE_DIRECTIVE}{name}");
    }
    for name in g.relations() {
        let _ = writeln!(out, "{RELATION_DIRECTIVE}{name}");
    }
    for f in g.facts() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            g.node_name(f.source),
            g.relation_name(f.relation),
            g.node_name(f.target)
        );
    }
    out
}

pub fn write_node_colors(g: &KnowledgeGraph) -> String {
    let mut out = String::new();
    for v in 0..g.node_count() {
        let _ = writeln!(out, "{}\t{}", g.node_name(v), g.node_color_label(v));
    }
    out
}

/// Returns `None` when the graph carries no pair coloring.
pub fn write_pair_colors(g: &KnowledgeGraph) -> Option<String> {
    let pc = g.pair_coloring()?;
    let mut out = String::new();
    for u in 0..g.node_count() {
        for v in 0..g.node_count() {
            let _ = writeln!(out, "{}\t{}\t{}", g.node_name(u), g.node_name(v), pc.label(u, v));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_two_relation_file() {
        let g = load_graph_from_str("v\tr1\tu\nv'\tr2\tu\n", None, None).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.relation_count(), 2);
        assert_eq!(g.facts().len(), 2);
        assert_eq!(g.nodes(), &["v", "u", "v'"]);
    }

    #[test]
    fn empty_file_gives_empty_graph() {
        let g = load_graph_from_str("", None, None).unwrap();
        assert_eq!(g.node_count(), 0);
        assert!(g.facts().is_empty());
    }

    #[test]
    fn repeated_line_is_one_fact() {
        let g = load_graph_from_str("a\tr\tb\na\tr\tb\n", None, None).unwrap();
        assert_eq!(g.facts().len(), 1);
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let g = load_graph_from_str("# header\n\na\tr\tb\r\n", None, None).unwrap();
        assert_eq!(g.facts().len(), 1);
        assert_eq!(g.node_name(1), "b");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load_graph_from_str("a\tr\tb\nbroken line\n", None, None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_node_in_color_file() {
        let err = load_graph_from_str("a\tr\tb\n", Some("zzz\tred\n"), None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn colors_and_pairs_round_trip() {
        let g = load_graph_from_str(
            "a\tr\tb\n",
            Some("a\tred\n"),
            Some("a\ta\teq\na\tb\tneq\nb\ta\tneq\nb\tb\teq\n"),
        )
        .unwrap();
        assert_eq!(g.node_color_label(0), "red");
        assert_eq!(g.node_color_label(1), DEFAULT_NODE_COLOR);
        assert!(g.pair_coloring().unwrap().tnd_flag());
        let again = load_graph_from_str(
            &write_triples(&g),
            Some(&write_node_colors(&g)),
            write_pair_colors(&g).as_deref(),
        )
        .unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn node_declarations_keep_isolated_nodes() {
        let g = load_graph_from_str("#node\tz\n# note\na\tr\tb\n", None, None).unwrap();
        assert_eq!(g.nodes(), &["z", "a", "b"]);
        assert_eq!(load_graph_from_str(&write_triples(&g), None, None).unwrap(), g);
    }

    #[test]
    fn partial_pair_coloring_rejected() {
        let err = load_graph_from_str("a\tr\tb\n", None, Some("a\ta\teq\n")).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
