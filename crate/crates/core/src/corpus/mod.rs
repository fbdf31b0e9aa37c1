//! Counterexample fixtures and seeded random instances.

mod random;

pub use random::{
    random_formula, random_history, random_kg, random_kg_with, rng, FormulaConfig,
    PairColorMode, RandomGraphConfig,
};

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{
    default_pair_coloring, write_node_colors, write_pair_colors, write_triples, KnowledgeGraph,
    PairColoringMode,
};
use crate::wl::{distinguishes, run_test, Distinction, Horizon, HistoryFunction, TestId};

pub const FIXTURE_NAMES: [&str; 4] = ["ga", "gb", "gc", "gd"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Never,
    At(usize),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Never => f.write_str("never"),
            Verdict::At(t) => write!(f, "distinguished at t={t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub test: TestId,
    pub a: (String, String),
    pub b: (String, String),
    pub verdict: Verdict,
}

/// Outcome of checking one claim against a run to stabilization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimCheck {
    pub claim: Claim,
    pub observed: Distinction,
}

impl ClaimCheck {
    pub fn passed(&self) -> bool {
        match (self.claim.verdict, self.observed) {
            (Verdict::Never, Distinction::Never) => true,
            (Verdict::At(a), Distinction::At(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: KnowledgeGraph,
    pub claims: Vec<Claim>,
}

impl Fixture {
    /// Runs every claimed test to stabilization and compares the verdicts.
    pub fn check(&self) -> Result<Vec<ClaimCheck>> {
        self.claims
            .iter()
            .map(|claim| {
                let trace = run_test(
                    claim.test,
                    &self.graph,
                    &HistoryFunction::Identity,
                    Horizon::Stabilize,
                )?;
                let g = &self.graph;
                let n = g.node_count();
                let index = |(x, y): &(String, String)| -> Result<usize> {
                    Ok(g.node_id(x)? * n + g.node_id(y)?)
                };
                Ok(ClaimCheck {
                    claim: claim.clone(),
                    observed: distinguishes(&trace, index(&claim.a)?, index(&claim.b)?)?,
                })
            })
            .collect()
    }

    /// Writes `triples.tsv`, `colors.tsv` and `pairs.tsv` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        let write = |file: &str, text: String| {
            let path = dir.join(file);
            std::fs::write(&path, text).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })
        };
        write("triples.tsv", write_triples(&self.graph))?;
        write("colors.tsv", write_node_colors(&self.graph))?;
        if let Some(pairs) = write_pair_colors(&self.graph) {
            write("pairs.tsv", pairs)?;
        }
        Ok(())
    }
}

fn graph(nodes: &[&str], facts: &[(&str, &str, &str)]) -> KnowledgeGraph {
    let mut b = KnowledgeGraph::builder();
    for n in nodes {
        b.add_node(n);
    }
    for (h, r, t) in facts {
        b.add_fact(h, r, t);
    }
    let g = b.build();
    let pc = default_pair_coloring(&g, PairColoringMode::Diagonal);
    g.with_pair_coloring(pc).expect("sizes agree")
}

fn claim(test: TestId, a: (&str, &str), b: (&str, &str), verdict: Verdict) -> Claim {
    Claim {
        test,
        a: (a.0.into(), a.1.into()),
        b: (b.0.into(), b.1.into()),
        verdict,
    }
}

pub fn fixture(name: &str) -> Result<Fixture> {
    use TestId::*;
    use Verdict::*;
    let six = ["u", "u'", "v", "v'", "x", "x'"];
    let (graph, claims) = match name {
        "ga" => (
            graph(&["u", "v", "v'"], &[("v", "r1", "u"), ("v'", "r2", "u")]),
            vec![
                claim(Rawl2, ("u", "v"), ("u", "v'"), Never),
                claim(Rawl2Plus, ("u", "v"), ("u", "v'"), At(1)),
            ],
        ),
        "gb" => (
            graph(&["u", "u'", "v", "x"], &[("x", "r", "u'")]),
            vec![
                claim(Rawl2, ("u", "v"), ("u'", "v"), Never),
                claim(Rwl2, ("u", "v"), ("u'", "v"), At(1)),
                claim(Rawl2Plus, ("u", "v"), ("u'", "v"), Never),
            ],
        ),
        "gc" => (
            graph(&six, &[("u", "r1", "x"), ("u'", "r2", "x'")]),
            vec![
                claim(Rwl2, ("u", "v"), ("u'", "v'"), Never),
                claim(Rwl2Plus, ("u", "v"), ("u'", "v'"), At(1)),
            ],
        ),
        "gd" => (
            graph(&six, &[("v", "r1", "x"), ("v'", "r2", "x'")]),
            vec![
                claim(Rwl2, ("u", "v"), ("u'", "v'"), Never),
                claim(Rawl2Plus, ("u", "v"), ("u'", "v'"), At(1)),
            ],
        ),
        other => return Err(Error::lookup("fixture", other)),
    };
    let name = FIXTURE_NAMES.iter().find(|n| **n == name).expect("matched above");
    Ok(Fixture {
        name,
        graph,
        claims,
    })
}

pub fn all_fixtures() -> Vec<Fixture> {
    FIXTURE_NAMES
        .iter()
        .map(|n| fixture(n).expect("built-in fixture"))
        .collect()
}
