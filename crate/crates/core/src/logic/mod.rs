//! Guarded counting logics over knowledge graphs.
//!
//! Binary formulas `φ(x, y)` read atoms as pair colors and quantify
//! `∃^{≥N} z (ψ(x, z) ∧ r(z, y))`; unary (graded modal) formulas read atoms
//! as node colors and quantify `∃^{≥N} y (ψ(y) ∧ r(y, x))`.
//!
//! Concrete syntax:
//!
//! ```text
//! F := A:<label> | !F | (F & F) | DIA[<relation>,<N>](F)
//! ```

mod compile;
mod eval;
mod parse;

use std::collections::HashMap;
use std::fmt;

pub use compile::{classify_pairs_via_compile, compile_gml_to_rmpnn, CompiledClassifier};
pub use eval::{eval_gml, eval_gml_all, eval_gml_subformulas, eval_rgfo3, eval_rgfo3_all};
pub use parse::parse_formula;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arity {
    /// graded modal logic, node classifiers
    Unary,
    /// pair classifiers
    Binary,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Atom(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Exists {
        count: u32,
        relation: String,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn atom(label: &str) -> Expr {
        Expr::Atom(label.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn exists(count: u32, relation: &str, body: Expr) -> Expr {
        Expr::Exists {
            count,
            relation: relation.to_string(),
            body: Box::new(body),
        }
    }

    /// Nesting depth of quantifiers and connectives; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Atom(_) => 0,
            Expr::Not(e) => 1 + e.depth(),
            Expr::And(a, b) => 1 + a.depth().max(b.depth()),
            Expr::Exists { body, .. } => 1 + body.depth(),
        }
    }

    pub fn has_negation(&self) -> bool {
        match self {
            Expr::Atom(_) => false,
            Expr::Not(_) => true,
            Expr::And(a, b) => a.has_negation() || b.has_negation(),
            Expr::Exists { body, .. } => body.has_negation(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Atom(a) => write!(f, "A:{a}"),
            Expr::Not(e) => write!(f, "!{e}"),
            Expr::And(a, b) => write!(f, "({a} & {b})"),
            Expr::Exists {
                count,
                relation,
                body,
            } => write!(f, "DIA[{relation},{count}]({body})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Formula {
    pub expr: Expr,
    pub arity: Arity,
}

impl Formula {
    pub fn new(expr: Expr, arity: Arity) -> Result<Self> {
        check_counts(&expr)?;
        Ok(Formula { expr, arity })
    }
}

fn check_counts(e: &Expr) -> Result<()> {
    match e {
        Expr::Atom(_) => Ok(()),
        Expr::Not(b) => check_counts(b),
        Expr::And(a, b) => check_counts(a).and_then(|_| check_counts(b)),
        Expr::Exists { count: 0, .. } => {
            Err(Error::Validation("counting quantifier needs N ≥ 1".into()))
        }
        Expr::Exists { body, .. } => check_counts(body),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

/// One entry of a [`SubformulaIndex`]; children point to earlier entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Subformula {
    Atom(String),
    Not(usize),
    And(usize, usize),
    Exists {
        count: u32,
        relation: String,
        body: usize,
    },
}

/// Distinct subformulas in post-order: every subformula precedes the
/// formulas containing it, and the root is last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubformulaIndex {
    entries: Vec<Subformula>,
}

impl SubformulaIndex {
    pub fn new(e: &Expr) -> Self {
        let mut entries = Vec::new();
        let mut seen = HashMap::new();
        Self::visit(e, &mut entries, &mut seen);
        SubformulaIndex { entries }
    }

    fn visit(e: &Expr, entries: &mut Vec<Subformula>, seen: &mut HashMap<Subformula, usize>) -> usize {
        let node = match e {
            Expr::Atom(a) => Subformula::Atom(a.clone()),
            Expr::Not(b) => Subformula::Not(Self::visit(b, entries, seen)),
            Expr::And(a, b) => {
                let i = Self::visit(a, entries, seen);
                let j = Self::visit(b, entries, seen);
                Subformula::And(i, j)
            }
            Expr::Exists {
                count,
                relation,
                body,
            } => Subformula::Exists {
                count: *count,
                relation: relation.clone(),
                body: Self::visit(body, entries, seen),
            },
        };
        *seen.entry(node.clone()).or_insert_with(|| {
            entries.push(node);
            entries.len() - 1
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Subformula] {
        &self.entries
    }

    pub fn root(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn atoms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter_map(|s| match s {
            Subformula::Atom(a) => Some(a.as_str()),
            _ => None,
        })
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter_map(|s| match s {
            Subformula::Exists { relation, .. } => Some(relation.as_str()),
            _ => None,
        })
    }
}

/// Reads a graded modal formula as a binary one over the pair graph.
pub fn translate_gml_to_rgfo3(phi: &Formula) -> Result<Formula> {
    flip(phi, Arity::Unary, Arity::Binary)
}

/// Reads a binary formula as a graded modal one over the pair graph.
pub fn translate_rgfo3_to_gml(phi: &Formula) -> Result<Formula> {
    flip(phi, Arity::Binary, Arity::Unary)
}

fn flip(phi: &Formula, from: Arity, to: Arity) -> Result<Formula> {
    if phi.arity != from {
        return Err(Error::Validation(format!(
            "expected a {from:?} formula, found {:?}",
            phi.arity
        )));
    }
    Ok(Formula {
        expr: phi.expr.clone(),
        arity: to,
    })
}
