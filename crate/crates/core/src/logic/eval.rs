use super::{Arity, Formula, Subformula, SubformulaIndex};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::kg::{KnowledgeGraph, NodeId, RelId};

enum Resolved {
    Atom(Option<u32>),
    Not(usize),
    And(usize, usize),
    Exists { count: usize, relation: RelId, body: usize },
}

fn resolve(
    g: &KnowledgeGraph,
    idx: &SubformulaIndex,
    labels: &[String],
) -> Result<Vec<Resolved>> {
    idx.entries()
        .iter()
        .map(|s| {
            Ok(match s {
                Subformula::Atom(a) => match labels.iter().position(|l| l == a) {
                    Some(c) => Resolved::Atom(Some(c as u32)),
                    // an empty graph has no color vocabulary
                    None if labels.is_empty() => Resolved::Atom(None),
                    None => return Err(Error::lookup("color", a)),
                },
                Subformula::Not(i) => Resolved::Not(*i),
                Subformula::And(i, j) => Resolved::And(*i, *j),
                Subformula::Exists {
                    count,
                    relation,
                    body,
                } => Resolved::Exists {
                    count: *count as usize,
                    relation: g.relation_id(relation)?,
                    body: *body,
                },
            })
        })
        .collect()
}

/// Truth values of every subformula over the nodes `0..n`, where `color(v)`
/// is the atom color seen at `v` and quantifiers step to incoming neighbors.
fn evaluate_row(
    g: &KnowledgeGraph,
    plan: &[Resolved],
    color: impl Fn(NodeId) -> u32,
) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut table: Vec<Vec<bool>> = Vec::with_capacity(plan.len());
    for step in plan {
        let row = match step {
            Resolved::Atom(c) => (0..n).map(|v| Some(color(v)) == *c).collect(),
            Resolved::Not(i) => table[*i].iter().map(|b| !b).collect(),
            Resolved::And(i, j) => table[*i].iter().zip(&table[*j]).map(|(a, b)| *a && *b).collect(),
            Resolved::Exists {
                count,
                relation,
                body,
            } => (0..n)
                .map(|v| {
                    g.incoming(v)
                        .iter()
                        .filter(|&&(r, w)| r == *relation && table[*body][w])
                        .count()
                        >= *count
                })
                .collect(),
        };
        table.push(row);
    }
    table
}

fn check_arity(phi: &Formula, arity: Arity) -> Result<()> {
    if phi.arity != arity {
        return Err(Error::Validation(format!(
            "expected a {arity:?} formula, found {:?}",
            phi.arity
        )));
    }
    Ok(())
}

/// Truth of a binary formula on every pair, indexed `u·n + v`.
pub fn eval_rgfo3_all(g: &KnowledgeGraph, phi: &Formula, exec: ExecPolicy) -> Result<Vec<bool>> {
    check_arity(phi, Arity::Binary)?;
    let pc = g
        .pair_coloring()
        .ok_or_else(|| Error::Precondition("binary formulas need a pair coloring".into()))?;
    let idx = SubformulaIndex::new(&phi.expr);
    let plan = resolve(g, &idx, pc.labels())?;
    let root = idx.root();
    let rows = exec.map(g.node_count(), |u| {
        evaluate_row(g, &plan, |v| pc.color(u, v)).swap_remove(root)
    });
    Ok(rows.into_iter().flatten().collect())
}

pub fn eval_rgfo3(g: &KnowledgeGraph, phi: &Formula, u: NodeId, v: NodeId) -> Result<bool> {
    let n = g.node_count();
    if u >= n || v >= n {
        return Err(Error::lookup("node", u.max(v).to_string()));
    }
    check_arity(phi, Arity::Binary)?;
    let pc = g
        .pair_coloring()
        .ok_or_else(|| Error::Precondition("binary formulas need a pair coloring".into()))?;
    let idx = SubformulaIndex::new(&phi.expr);
    let plan = resolve(g, &idx, pc.labels())?;
    Ok(evaluate_row(g, &plan, |w| pc.color(u, w))[idx.root()][v])
}

/// Truth of a unary formula at every node.
pub fn eval_gml_all(g: &KnowledgeGraph, phi: &Formula) -> Result<Vec<bool>> {
    check_arity(phi, Arity::Unary)?;
    let idx = SubformulaIndex::new(&phi.expr);
    let plan = resolve(g, &idx, g.color_labels())?;
    Ok(evaluate_row(g, &plan, |v| g.node_color(v)).swap_remove(idx.root()))
}

pub fn eval_gml(g: &KnowledgeGraph, phi: &Formula, v: NodeId) -> Result<bool> {
    if v >= g.node_count() {
        return Err(Error::lookup("node", v.to_string()));
    }
    Ok(eval_gml_all(g, phi)?[v])
}

/// Truth of every subformula at every node, `[ℓ][v]`.
pub fn eval_gml_subformulas(
    g: &KnowledgeGraph,
    idx: &SubformulaIndex,
) -> Result<Vec<Vec<bool>>> {
    let plan = resolve(g, idx, g.color_labels())?;
    Ok(evaluate_row(g, &plan, |v| g.node_color(v)))
}
