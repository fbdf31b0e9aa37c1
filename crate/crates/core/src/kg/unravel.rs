//! Depth-bounded unravellings and their canonical codes.
//!
//! A tree node is a typed walk `v ←r₁ u₁ ←r₂ … ←rᵢ uᵢ` that follows incoming
//! facts backwards from the root. Each tree node has exactly one fact to its
//! parent, labelled with the relation of the step. Two parallel facts
//! `r₁(w,v)` and `r₂(w,v)` therefore produce two children of `v`.

use std::fmt::Write as _;

use super::{ColorId, KnowledgeGraph, NodeId, RelId};
use crate::error::{Error, Result};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    /// `(v, u₁, …, uᵢ)`
    pub path: Vec<NodeId>,
    pub parent: Option<usize>,
    /// Relation of the fact `r((…,uᵢ), (…,uᵢ₋₁))`; `None` at the root.
    pub relation: Option<RelId>,
    pub color: ColorId,
    pub children: Vec<usize>,
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        self.path.len() - 1
    }

    pub fn endpoint(&self) -> NodeId {
        *self.path.last().expect("paths are non-empty")
    }
}

/// Nodes are stored breadth-first; index 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnravellingTree {
    pub nodes: Vec<TreeNode>,
    color_labels: Vec<String>,
    relations: Vec<String>,
}

impl UnravellingTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(TreeNode::depth).max().unwrap_or(0)
    }

    pub fn color_label(&self, i: usize) -> &str {
        &self.color_labels[self.nodes[i].color as usize]
    }

    pub fn relation_name(&self, r: RelId) -> &str {
        &self.relations[r]
    }

    /// The tree cut down to nodes of depth at most `depth`.
    pub fn truncated(&self, depth: usize) -> UnravellingTree {
        let keep = self.nodes.iter().take_while(|n| n.depth() <= depth).count();
        let nodes = self.nodes[..keep]
            .iter()
            .map(|n| TreeNode {
                children: n.children.iter().copied().filter(|&c| c < keep).collect(),
                ..n.clone()
            })
            .collect();
        UnravellingTree {
            nodes,
            color_labels: self.color_labels.clone(),
            relations: self.relations.clone(),
        }
    }
}

pub fn unravel(g: &KnowledgeGraph, v: NodeId, depth: usize) -> Result<UnravellingTree> {
    unravel_with_budget(g, v, depth, DEFAULT_NODE_BUDGET)
}

pub fn unravel_with_budget(
    g: &KnowledgeGraph,
    v: NodeId,
    depth: usize,
    budget: usize,
) -> Result<UnravellingTree> {
    if v >= g.node_count() {
        return Err(Error::lookup("node", v.to_string()));
    }
    if budget == 0 {
        return Err(Error::NodeBudget { budget });
    }
    let mut nodes = vec![TreeNode {
        path: vec![v],
        parent: None,
        relation: None,
        color: g.node_color(v),
        children: Vec::new(),
    }];
    let mut frontier = 0;
    while frontier < nodes.len() {
        if nodes[frontier].depth() < depth {
            let end = nodes[frontier].endpoint();
            for &(r, w) in g.incoming(end) {
                if nodes.len() == budget {
                    return Err(Error::NodeBudget { budget });
                }
                let mut path = nodes[frontier].path.clone();
                path.push(w);
                let id = nodes.len();
                nodes.push(TreeNode {
                    path,
                    parent: Some(frontier),
                    relation: Some(r),
                    color: g.node_color(w),
                    children: Vec::new(),
                });
                nodes[frontier].children.push(id);
            }
        }
        frontier += 1;
    }
    Ok(UnravellingTree {
        nodes,
        color_labels: g.color_labels().to_vec(),
        relations: g.relations().to_vec(),
    })
}

/// Canonical form of a rooted, colored, relation-labelled tree. Equal codes
/// iff the trees are isomorphic by a root-preserving isomorphism that keeps
/// color labels and relation names.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeCode(String);

impl TreeCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn push_label(out: &mut String, label: &str) {
    // length prefix keeps the encoding injective for arbitrary labels
    let _ = write!(out, "{}:{}", label.len(), label);
}

pub fn canonical_tree_code(tree: &UnravellingTree) -> TreeCode {
    let mut codes: Vec<String> = vec![String::new(); tree.len()];
    // children always come after their parent in breadth-first order
    for i in (0..tree.len()).rev() {
        let node = &tree.nodes[i];
        let mut children: Vec<String> = node
            .children
            .iter()
            .map(|&c| {
                let mut s = String::new();
                let rel = tree.nodes[c].relation.expect("child has a relation");
                push_label(&mut s, tree.relation_name(rel));
                s.push_str(&std::mem::take(&mut codes[c]));
                s
            })
            .collect();
        children.sort_unstable();
        let mut code = String::new();
        push_label(&mut code, tree.color_label(i));
        code.push('[');
        for (k, c) in children.iter().enumerate() {
            if k > 0 {
                code.push(',');
            }
            code.push_str(c);
        }
        code.push(']');
        codes[i] = code;
    }
    TreeCode(codes.swap_remove(0))
}
