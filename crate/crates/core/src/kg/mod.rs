//! Knowledge-graph data model.
//!
//! Nodes and relations are interned to dense indices in first-appearance
//! order. Facts form a set; inserting the same `(relation, source, target)`
//! twice keeps one copy. Node colorings and pairwise colorings are stored as
//! dense color ids plus a label table.

mod construct;
mod io;
mod unravel;

use std::collections::{HashMap, HashSet};

pub use construct::{augment, default_pair_coloring, product_square, PairColoringMode};
pub use io::{load_graph, load_graph_from_str, write_node_colors, write_pair_colors, write_triples};
pub use unravel::{
    canonical_tree_code, unravel, unravel_with_budget, TreeCode, TreeNode, UnravellingTree,
    DEFAULT_NODE_BUDGET,
};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type RelId = usize;
pub type ColorId = u32;

/// Label given to every node when no node coloring is supplied.
pub const DEFAULT_NODE_COLOR: &str = "default";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub relation: RelId,
    pub source: NodeId,
    pub target: NodeId,
}

/// Interns labels to dense ids in first-appearance order.
#[derive(Clone, Debug, Default)]
pub(crate) struct Interner {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    pub(crate) fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub(crate) fn into_labels(self) -> Vec<String> {
        self.labels
    }
}

/// Colors of all ordered node pairs, stored row-major (`u * n + v`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairColoring {
    n: usize,
    colors: Vec<ColorId>,
    labels: Vec<String>,
    tnd: bool,
}

impl PairColoring {
    pub fn new(n: usize, colors: Vec<ColorId>, labels: Vec<String>) -> Result<Self> {
        if colors.len() != n * n {
            return Err(Error::Validation(format!(
                "pair coloring has {} entries, expected {} for {} nodes",
                colors.len(),
                n * n,
                n
            )));
        }
        if let Some(bad) = colors.iter().find(|&&c| c as usize >= labels.len()) {
            return Err(Error::Validation(format!(
                "pair color id {bad} has no label"
            )));
        }
        let tnd = target_node_distinguishability(n, &colors);
        Ok(PairColoring {
            n,
            colors,
            labels,
            tnd,
        })
    }

    /// Builds a pair coloring from a labelling function, interning labels in
    /// lexicographic pair order.
    pub fn from_fn(n: usize, mut label: impl FnMut(NodeId, NodeId) -> String) -> Self {
        let mut interner = Interner::default();
        let mut colors = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                colors.push(interner.intern(&label(u, v)));
            }
        }
        let tnd = target_node_distinguishability(n, &colors);
        PairColoring {
            n,
            colors,
            labels: interner.into_labels(),
            tnd,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn color(&self, u: NodeId, v: NodeId) -> ColorId {
        self.colors[u * self.n + v]
    }

    pub fn label(&self, u: NodeId, v: NodeId) -> &str {
        &self.labels[self.color(u, v) as usize]
    }

    pub fn colors(&self) -> &[ColorId] {
        &self.colors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_id(&self, label: &str) -> Option<ColorId> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as ColorId)
    }

    /// True iff `(u,u)` and `(u,v)` get different colors whenever `u != v`.
    pub fn tnd_flag(&self) -> bool {
        self.tnd
    }
}

fn target_node_distinguishability(n: usize, colors: &[ColorId]) -> bool {
    (0..n).all(|u| {
        let diag = colors[u * n + u];
        (0..n).all(|v| v == u || colors[u * n + v] != diag)
    })
}

#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    nodes: Vec<String>,
    node_index: HashMap<String, NodeId>,
    relations: Vec<String>,
    relation_index: HashMap<String, RelId>,
    facts: Vec<Fact>,
    // incoming[v] = sorted (relation, source) for every fact r(source, v)
    incoming: Vec<Vec<(RelId, NodeId)>>,
    node_colors: Vec<ColorId>,
    color_labels: Vec<String>,
    pair_coloring: Option<PairColoring>,
    features: Option<Vec<Vec<f64>>>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.relations == other.relations
            && self.facts == other.facts
            && self.node_colors == other.node_colors
            && self.color_labels == other.color_labels
            && self.pair_coloring == other.pair_coloring
            && self.features == other.features
    }
}

impl KnowledgeGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    /// Builds a graph with nodes `0..n` named by their index and relations
    /// `r0..`, from dense fact triples `(relation, source, target)`.
    pub fn from_indexed(
        n: usize,
        relation_count: usize,
        facts: impl IntoIterator<Item = (RelId, NodeId, NodeId)>,
    ) -> Result<Self> {
        let mut b = GraphBuilder::default();
        for v in 0..n {
            b.add_node(&v.to_string());
        }
        for r in 0..relation_count {
            b.add_relation(&format!("r{r}"));
        }
        for (r, s, t) in facts {
            if r >= relation_count || s >= n || t >= n {
                return Err(Error::Validation(format!(
                    "fact ({r},{s},{t}) out of range"
                )));
            }
            b.add_fact_ids(r, s, t);
        }
        Ok(b.build())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.nodes[v]
    }

    pub fn relation_name(&self, r: RelId) -> &str {
        &self.relations[r]
    }

    pub fn node_id(&self, name: &str) -> Result<NodeId> {
        self.node_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::lookup("node", name))
    }

    pub fn relation_id(&self, name: &str) -> Result<RelId> {
        self.relation_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::lookup("relation", name))
    }

    pub fn has_fact(&self, relation: RelId, source: NodeId, target: NodeId) -> bool {
        self.incoming
            .get(target)
            .is_some_and(|inc| inc.binary_search(&(relation, source)).is_ok())
    }

    /// Incoming `(relation, source)` pairs of `v`, sorted.
    pub fn incoming(&self, v: NodeId) -> &[(RelId, NodeId)] {
        &self.incoming[v]
    }

    /// `N_r(v)`: sources of `r`-facts pointing at `v`, ascending.
    pub fn neighborhood(&self, v: NodeId, r: RelId) -> Result<Vec<NodeId>> {
        if v >= self.node_count() {
            return Err(Error::lookup("node", v.to_string()));
        }
        if r >= self.relation_count() {
            return Err(Error::lookup("relation", r.to_string()));
        }
        Ok(self.incoming[v]
            .iter()
            .filter(|&&(rel, _)| rel == r)
            .map(|&(_, w)| w)
            .collect())
    }

    pub fn neighborhood_by_name(&self, v: &str, r: &str) -> Result<Vec<NodeId>> {
        self.neighborhood(self.node_id(v)?, self.relation_id(r)?)
    }

    pub fn node_color(&self, v: NodeId) -> ColorId {
        self.node_colors[v]
    }

    pub fn node_colors(&self) -> &[ColorId] {
        &self.node_colors
    }

    pub fn node_color_label(&self, v: NodeId) -> &str {
        &self.color_labels[self.node_colors[v] as usize]
    }

    pub fn color_labels(&self) -> &[String] {
        &self.color_labels
    }

    pub fn pair_coloring(&self) -> Option<&PairColoring> {
        self.pair_coloring.as_ref()
    }

    pub fn features(&self) -> Option<&[Vec<f64>]> {
        self.features.as_deref()
    }

    /// Replaces the node coloring with one label per node.
    pub fn with_node_labels<S: AsRef<str>>(mut self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.node_count() {
            return Err(Error::Validation(format!(
                "{} node colors given for {} nodes",
                labels.len(),
                self.node_count()
            )));
        }
        let mut interner = Interner::default();
        self.node_colors = labels.iter().map(|l| interner.intern(l.as_ref())).collect();
        self.color_labels = interner.into_labels();
        Ok(self)
    }

    pub fn with_pair_coloring(mut self, pairs: PairColoring) -> Result<Self> {
        if pairs.node_count() != self.node_count() {
            return Err(Error::Validation(format!(
                "pair coloring covers {} nodes, graph has {}",
                pairs.node_count(),
                self.node_count()
            )));
        }
        self.pair_coloring = Some(pairs);
        Ok(self)
    }

    pub fn without_pair_coloring(mut self) -> Self {
        self.pair_coloring = None;
        self
    }

    pub fn with_features(mut self, features: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() != self.node_count() {
            return Err(Error::Validation(format!(
                "{} feature vectors given for {} nodes",
                features.len(),
                self.node_count()
            )));
        }
        self.features = Some(features);
        Ok(self)
    }

    /// Renames node `v` to position `perm[v]`, carrying facts, colorings and
    /// features along. `perm` must be a permutation of `0..n`.
    pub fn permuted(&self, perm: &[NodeId]) -> Result<Self> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Validation("not a permutation of the node set".into()));
        }
        let mut inverse = vec![0; n];
        for (v, &p) in perm.iter().enumerate() {
            inverse[p] = v;
        }
        let mut b = GraphBuilder::default();
        for &old in &inverse {
            b.add_node(&self.nodes[old]);
        }
        for r in &self.relations {
            b.add_relation(r);
        }
        for f in &self.facts {
            b.add_fact_ids(f.relation, perm[f.source], perm[f.target]);
        }
        let labels: Vec<&str> = inverse.iter().map(|&old| self.node_color_label(old)).collect();
        let mut g = b.build().with_node_labels(&labels)?;
        if let Some(pc) = &self.pair_coloring {
            let permuted =
                PairColoring::from_fn(n, |u, v| pc.label(inverse[u], inverse[v]).to_string());
            g = g.with_pair_coloring(permuted)?;
        }
        if let Some(x) = &self.features {
            g = g.with_features(inverse.iter().map(|&old| x[old].clone()).collect())?;
        }
        Ok(g)
    }
}

/// Incremental graph construction with first-appearance interning.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<String>,
    node_index: HashMap<String, NodeId>,
    relations: Vec<String>,
    relation_index: HashMap<String, RelId>,
    facts: Vec<Fact>,
    fact_set: HashSet<Fact>,
}

impl GraphBuilder {
    pub fn add_node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.node_index.get(name) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(name.to_string());
        self.node_index.insert(name.to_string(), id);
        id
    }

    pub fn add_relation(&mut self, name: &str) -> RelId {
        if let Some(&id) = self.relation_index.get(name) {
            return id;
        }
        let id = self.relations.len();
        self.relations.push(name.to_string());
        self.relation_index.insert(name.to_string(), id);
        id
    }

    /// Adds `relation(head, tail)`, interning names as needed. Returns false
    /// when the fact was already present.
    pub fn add_fact(&mut self, head: &str, relation: &str, tail: &str) -> bool {
        let s = self.add_node(head);
        let r = self.add_relation(relation);
        let t = self.add_node(tail);
        self.add_fact_ids(r, s, t)
    }

    pub fn add_fact_ids(&mut self, relation: RelId, source: NodeId, target: NodeId) -> bool {
        let fact = Fact {
            relation,
            source,
            target,
        };
        if self.fact_set.insert(fact) {
            self.facts.push(fact);
            true
        } else {
            false
        }
    }

    pub fn build(self) -> KnowledgeGraph {
        let n = self.nodes.len();
        let mut incoming = vec![Vec::new(); n];
        for f in &self.facts {
            incoming[f.target].push((f.relation, f.source));
        }
        for list in &mut incoming {
            list.sort_unstable();
        }
        let (node_colors, color_labels) = if n == 0 {
            (Vec::new(), Vec::new())
        } else {
            (vec![0; n], vec![DEFAULT_NODE_COLOR.to_string()])
        };
        KnowledgeGraph {
            nodes: self.nodes,
            node_index: self.node_index,
            relations: self.relations,
            relation_index: self.relation_index,
            facts: self.facts,
            incoming,
            node_colors,
            color_labels,
            pair_coloring: None,
            features: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g_a() -> KnowledgeGraph {
        let mut b = KnowledgeGraph::builder();
        b.add_fact("v", "r1", "u");
        b.add_fact("v'", "r2", "u");
        b.build()
    }

    #[test]
    fn duplicate_facts_collapse() {
        let mut b = KnowledgeGraph::builder();
        assert!(b.add_fact("a", "r", "b"));
        assert!(!b.add_fact("a", "r", "b"));
        assert_eq!(b.build().facts().len(), 1);
    }

    #[test]
    fn neighborhood_is_incoming() {
        let g = g_a();
        assert_eq!(g.neighborhood_by_name("u", "r1").unwrap(), vec![g.node_id("v").unwrap()]);
        assert!(g.neighborhood_by_name("v", "r1").unwrap().is_empty());
        assert!(matches!(
            g.neighborhood_by_name("w", "r1"),
            Err(Error::Lookup { kind: "node", .. })
        ));
        assert!(matches!(
            g.neighborhood_by_name("u", "r9"),
            Err(Error::Lookup { kind: "relation", .. })
        ));
    }

    #[test]
    fn tnd_flag_tracks_diagonal() {
        let pc = PairColoring::from_fn(2, |u, v| if u == v { "eq".into() } else { "neq".into() });
        assert!(pc.tnd_flag());
        let flat = PairColoring::from_fn(2, |_, _| "x".into());
        assert!(!flat.tnd_flag());
        let single = PairColoring::from_fn(1, |_, _| "x".into());
        assert!(single.tnd_flag());
    }

    #[test]
    fn pair_coloring_rejects_wrong_size() {
        assert!(PairColoring::new(2, vec![0; 3], vec!["a".into()]).is_err());
        assert!(PairColoring::new(1, vec![1], vec!["a".into()]).is_err());
    }

    #[test]
    fn permutation_moves_facts_and_colors() {
        let g = g_a().with_node_labels(&["a", "b", "c"]).unwrap();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.node_name(2), "v");
        assert_eq!(p.node_color_label(2), "a");
        assert_eq!(p.node_color_label(0), "b");
        assert!(p.has_fact(0, 2, 0));
        assert!(g.permuted(&[0, 0, 1]).is_err());
    }
}
