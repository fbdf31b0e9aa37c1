//! Seeded property suites with JSON reports.

mod suites;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::corpus::rng;
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::kg::{write_node_colors, write_pair_colors, write_triples, KnowledgeGraph, DEFAULT_NODE_BUDGET};
use crate::wl::{refines, WLTrace};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Reduction,
    History,
    Hierarchy,
    Simulation,
    Logic,
    Fixtures,
    All,
}

impl Suite {
    pub const NAMED: [Suite; 6] = [
        Suite::Reduction,
        Suite::History,
        Suite::Hierarchy,
        Suite::Simulation,
        Suite::Logic,
        Suite::Fixtures,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Reduction => "reduction",
            Suite::History => "history",
            Suite::Hierarchy => "hierarchy",
            Suite::Simulation => "simulation",
            Suite::Logic => "logic",
            Suite::Fixtures => "fixtures",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::NAMED
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::lookup("suite", s))
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Instances per check; `None` uses each check's default corpus size.
    pub trials: Option<usize>,
    pub exec: ExecPolicy,
    pub node_budget: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            trials: None,
            exec: ExecPolicy::default(),
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub instances: usize,
    /// First failing instance: graph, indices and iteration.
    pub witness: Option<Value>,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub suite: Suite,
    pub seed: u64,
    pub trials: Option<usize>,
    pub checks: Vec<Check>,
    pub total_ms: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Without timings the document is a pure function of command and seed.
    pub fn to_json(&self, timings: bool) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "suite": c.suite.name(),
                    "name": c.name,
                    "passed": c.passed,
                    "instances": c.instances,
                    "witness": c.witness,
                })
            })
            .collect();
        let mut doc = json!({
            "schema": REPORT_SCHEMA,
            "command": self.command,
            "suite": self.suite.name(),
            "seed": self.seed,
            "trials": self.trials,
            "passed": self.passed(),
            "checks": checks,
        });
        if timings {
            doc["timings"] = json!({
                "total_ms": self.total_ms,
                "checks": self
                    .checks
                    .iter()
                    .map(|c| json!({ "name": c.name, "ms": c.elapsed_ms }))
                    .collect::<Vec<_>>(),
            });
        }
        doc
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions, command: &str) -> Result<Report> {
    let start = Instant::now();
    let suites: Vec<Suite> = match suite {
        Suite::All => Suite::NAMED.to_vec(),
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in suites {
        checks.extend(suites::run(s, opts)?);
    }
    Ok(Report {
        command: command.to_string(),
        suite,
        seed: opts.seed,
        trials: opts.trials,
        checks,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Deterministic per-instance generator for `(seed, check, trial)`.
pub(crate) fn trial_rng(seed: u64, label: &str, trial: usize) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    rng(seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(h)
        .wrapping_add((trial as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)))
}

pub fn graph_witness(g: &KnowledgeGraph) -> Value {
    json!({
        "triples": write_triples(g),
        "node_colors": write_node_colors(g),
        "pair_colors": write_pair_colors(g),
    })
}

/// First `t` at which `colorings[t + 1]` fails to refine `colorings[t]`.
pub fn monotonicity_violation(trace: &WLTrace) -> Option<usize> {
    trace
        .colorings
        .windows(2)
        .position(|w| !refines(&w[1], &w[0]).unwrap_or(false))
}
