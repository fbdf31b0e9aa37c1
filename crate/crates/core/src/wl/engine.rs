use std::collections::HashMap;

use serde_json::{json, Value};

use super::{equivalent, Coloring, HistoryFunction, TestId};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::kg::{augment, KnowledgeGraph};

/// Default cap on `|V|` for pairwise tests, which materialize `|V|²` colors.
pub const DEFAULT_MAX_PAIR_NODES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Iterations(usize),
    /// Stop at the first `t` whose partition equals that of `t - 1`.
    Stabilize,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub history: HistoryFunction,
    pub horizon: Horizon,
    pub exec: ExecPolicy,
    /// Run pairwise tests even when the pair coloring lacks target node
    /// distinguishability.
    pub waive_tnd: bool,
    pub max_pair_nodes: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            history: HistoryFunction::Identity,
            horizon: Horizon::Stabilize,
            exec: ExecPolicy::default(),
            waive_tnd: false,
            max_pair_nodes: DEFAULT_MAX_PAIR_NODES,
        }
    }
}

impl RunOptions {
    pub fn new(history: HistoryFunction, horizon: Horizon) -> Self {
        RunOptions {
            history,
            horizon,
            ..Default::default()
        }
    }

    pub fn waive_tnd(mut self) -> Self {
        self.waive_tnd = true;
        self
    }

    pub fn exec(mut self, exec: ExecPolicy) -> Self {
        self.exec = exec;
        self
    }
}

/// Per-iteration colorings of one test run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WLTrace {
    pub test: TestId,
    pub node_count: usize,
    pub colorings: Vec<Coloring>,
    pub stabilized_at: Option<usize>,
}

impl WLTrace {
    pub fn arity(&self) -> usize {
        self.test.arity()
    }

    /// Index of the last recorded iteration.
    pub fn horizon(&self) -> usize {
        self.colorings.len() - 1
    }

    /// Coloring at iteration `t`; past the horizon of a stabilized trace the
    /// stable coloring is returned.
    pub fn at(&self, t: usize) -> Option<&Coloring> {
        match self.colorings.get(t) {
            Some(c) => Some(c),
            None if self.stabilized_at.is_some() => self.colorings.last(),
            None => None,
        }
    }

    pub fn pair_index(&self, u: usize, v: usize) -> usize {
        u * self.node_count + v
    }

    pub fn to_json(&self, g: &KnowledgeGraph) -> Value {
        let label = |i: usize| -> Value {
            if self.arity() == 1 {
                json!(g.node_name(i))
            } else {
                let n = self.node_count;
                json!([g.node_name(i / n), g.node_name(i % n)])
            }
        };
        let partitions: Vec<Value> = self
            .colorings
            .iter()
            .map(|c| {
                Value::Array(
                    c.classes()
                        .into_iter()
                        .map(|class| Value::Array(class.into_iter().map(label).collect()))
                        .collect(),
                )
            })
            .collect();
        json!({
            "test": self.test.name(),
            "iterations": self.horizon(),
            "partitions": partitions,
            "stabilized_at": self.stabilized_at,
        })
    }
}

pub fn run_test(
    test: TestId,
    g: &KnowledgeGraph,
    history: &HistoryFunction,
    horizon: Horizon,
) -> Result<WLTrace> {
    run_test_with(test, g, &RunOptions::new(history.clone(), horizon))
}

#[derive(Clone, Copy)]
enum Rule {
    Unary,
    Asymmetric,
    Symmetric,
}

pub fn run_test_with(test: TestId, g: &KnowledgeGraph, opts: &RunOptions) -> Result<WLTrace> {
    let augmented;
    let graph = if test.augmented() {
        augmented = augment(g);
        &augmented
    } else {
        g
    };
    let n = graph.node_count();
    let (rule, initial) = match test {
        TestId::Rwl1 => (Rule::Unary, Coloring::new(graph.node_colors().to_vec())),
        _ => {
            let pc = graph.pair_coloring().ok_or_else(|| {
                Error::Precondition(format!("{test} needs a pair coloring"))
            })?;
            if !pc.tnd_flag() && !opts.waive_tnd {
                return Err(Error::Precondition(format!(
                    "{test} needs a pair coloring with target node distinguishability"
                )));
            }
            if n > opts.max_pair_nodes {
                return Err(Error::Precondition(format!(
                    "{test} on {n} nodes exceeds the pairwise cap of {}",
                    opts.max_pair_nodes
                )));
            }
            let rule = match test {
                TestId::Rawl2 | TestId::Rawl2Plus => Rule::Asymmetric,
                _ => Rule::Symmetric,
            };
            (rule, Coloring::new(pc.colors().to_vec()))
        }
    };

    let index_count = initial.len();
    let limit = match opts.horizon {
        Horizon::Iterations(t) => t,
        // each non-final step strictly increases the number of classes
        Horizon::Stabilize => index_count + 1,
    };
    let mut colorings = vec![initial.normalized()];
    let mut stabilized_at = None;
    for t in 0..limit {
        let own = &colorings[opts.history.apply(t)];
        let cur = &colorings[t];
        let next = refine(rule, graph, own, cur, opts.exec);
        if stabilized_at.is_none() && equivalent(&next, cur)? {
            stabilized_at = Some(t + 1);
        }
        colorings.push(next);
        if stabilized_at.is_some() && opts.horizon == Horizon::Stabilize {
            break;
        }
    }
    Ok(WLTrace {
        test,
        node_count: n,
        colorings,
        stabilized_at,
    })
}

/// One application of the update rule followed by dense renumbering of the
/// signatures in index order.
fn refine(
    rule: Rule,
    g: &KnowledgeGraph,
    own: &Coloring,
    cur: &Coloring,
    exec: ExecPolicy,
) -> Coloring {
    let n = g.node_count();
    let signatures: Vec<Vec<u32>> = match rule {
        Rule::Unary => exec.map(n, |v| {
            let mut ms: Vec<(u32, u32)> = g
                .incoming(v)
                .iter()
                .map(|&(r, w)| (cur.color(w), r as u32))
                .collect();
            ms.sort_unstable();
            let mut sig = Vec::with_capacity(1 + 2 * ms.len());
            sig.push(own.color(v));
            sig.extend(ms.into_iter().flat_map(|(c, r)| [c, r]));
            sig
        }),
        Rule::Asymmetric | Rule::Symmetric => {
            let symmetric = matches!(rule, Rule::Symmetric);
            let rows = exec.map(n, |u| {
                (0..n)
                    .map(|v| {
                        let mut second: Vec<(u32, u32)> = g
                            .incoming(v)
                            .iter()
                            .map(|&(r, w)| (cur.color(u * n + w), r as u32))
                            .collect();
                        second.sort_unstable();
                        let mut sig = vec![own.color(u * n + v)];
                        if symmetric {
                            let mut first: Vec<(u32, u32)> = g
                                .incoming(u)
                                .iter()
                                .map(|&(r, w)| (cur.color(w * n + v), r as u32))
                                .collect();
                            first.sort_unstable();
                            sig.push(first.len() as u32);
                            sig.extend(first.into_iter().flat_map(|(c, r)| [c, r]));
                        }
                        sig.extend(second.into_iter().flat_map(|(c, r)| [c, r]));
                        sig
                    })
                    .collect::<Vec<_>>()
            });
            rows.into_iter().flatten().collect()
        }
    };
    let mut ids: HashMap<Vec<u32>, u32> = HashMap::with_capacity(signatures.len());
    let colors = signatures
        .into_iter()
        .map(|sig| {
            let next = ids.len() as u32;
            *ids.entry(sig).or_insert(next)
        })
        .collect();
    Coloring::new(colors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distinction {
    /// First iteration at which the two indices have different colors.
    At(usize),
    /// Never separated; sound because the trace reached stabilization.
    Never,
    /// Not separated within the recorded iterations of an unstabilized trace.
    UnknownBeyondHorizon,
}

pub fn distinguishes(trace: &WLTrace, x: usize, y: usize) -> Result<Distinction> {
    let len = trace.colorings[0].len();
    if x >= len || y >= len {
        return Err(Error::Validation(format!(
            "index out of range for a trace over {len} indices"
        )));
    }
    if x == y {
        return Ok(Distinction::Never);
    }
    if let Some(t) = trace.colorings.iter().position(|c| c.color(x) != c.color(y)) {
        return Ok(Distinction::At(t));
    }
    Ok(if trace.stabilized_at.is_some() {
        Distinction::Never
    } else {
        Distinction::UnknownBeyondHorizon
    })
}
