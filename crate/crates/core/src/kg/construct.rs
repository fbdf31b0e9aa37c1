use std::collections::HashSet;

use super::{GraphBuilder, KnowledgeGraph, PairColoring};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairColoringMode {
    /// Two classes: `eq` on the diagonal, `neq` elsewhere.
    Diagonal,
    /// `(c(u), c(v), u = v)`.
    ColoredDiagonal,
}

pub fn default_pair_coloring(g: &KnowledgeGraph, mode: PairColoringMode) -> PairColoring {
    PairColoring::from_fn(g.node_count(), |u, v| {
        let tag = if u == v { "eq" } else { "neq" };
        match mode {
            PairColoringMode::Diagonal => tag.to_string(),
            PairColoringMode::ColoredDiagonal => format!(
                "{}|{}|{tag}",
                g.node_color_label(u),
                g.node_color_label(v)
            ),
        }
    })
}

/// Adds a fresh inverse relation `r^-` for every relation and a fact
/// `r^-(v, u)` for every non-loop fact `r(u, v)`.
///
/// Inverse relation `i` has id `|R| + i`. Colorings and features carry over.
pub fn augment(g: &KnowledgeGraph) -> KnowledgeGraph {
    let mut taken: HashSet<String> = g.relations().iter().cloned().collect();
    let mut b = GraphBuilder::default();
    for name in g.nodes() {
        b.add_node(name);
    }
    for r in g.relations() {
        b.add_relation(r);
    }
    for r in g.relations() {
        let mut inverse = format!("{r}^-");
        while taken.contains(&inverse) {
            inverse.push('\'');
        }
        taken.insert(inverse.clone());
        b.add_relation(&inverse);
    }
    let base = g.relation_count();
    for f in g.facts() {
        b.add_fact_ids(f.relation, f.source, f.target);
    }
    for f in g.facts() {
        if f.source != f.target {
            b.add_fact_ids(base + f.relation, f.target, f.source);
        }
    }
    carry_annotations(g, b.build())
}

fn carry_annotations(from: &KnowledgeGraph, mut to: KnowledgeGraph) -> KnowledgeGraph {
    to.node_colors = from.node_colors.clone();
    to.color_labels = from.color_labels.clone();
    to.pair_coloring = from.pair_coloring.clone();
    to.features = from.features.clone();
    to
}

/// The pair graph `G²`: nodes are ordered pairs `(a, b)` at index `a·n + b`,
/// facts `r((a,w),(a,v))` for every fact `r(w,v)` and every `a`, node colors
/// taken from the pair coloring. Relations are shared with `G`.
pub fn product_square(g: &KnowledgeGraph) -> Result<KnowledgeGraph> {
    let pc = g.pair_coloring().ok_or_else(|| {
        Error::Precondition("product graph needs a pair coloring".into())
    })?;
    let n = g.node_count();
    let mut b = GraphBuilder::default();
    for a in 0..n {
        for c in 0..n {
            b.add_node(&format!("({},{})", g.node_name(a), g.node_name(c)));
        }
    }
    for r in g.relations() {
        b.add_relation(r);
    }
    for a in 0..n {
        for f in g.facts() {
            b.add_fact_ids(f.relation, a * n + f.source, a * n + f.target);
        }
    }
    let labels: Vec<&str> = (0..n * n).map(|i| pc.label(i / n, i % n)).collect();
    b.build().with_node_labels(&labels)
}
