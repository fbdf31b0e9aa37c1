//! Color refinement over knowledge graphs and partition comparison.

mod engine;

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

pub use engine::{
    distinguishes, run_test, run_test_with, Distinction, Horizon, RunOptions, WLTrace,
    DEFAULT_MAX_PAIR_NODES,
};

use crate::error::{Error, Result};

/// Colors of an index set (nodes, or pairs at `u·n + v`). Color ids are
/// opaque; two colorings are only compared as partitions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coloring {
    colors: Vec<u32>,
}

impl Coloring {
    pub fn new(colors: Vec<u32>) -> Self {
        Coloring { colors }
    }

    /// Dense renumbering of arbitrary keys in first-appearance order.
    pub fn from_keys<K: Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Self {
        let mut ids: HashMap<K, u32> = HashMap::new();
        let colors = keys
            .into_iter()
            .map(|k| {
                let next = ids.len() as u32;
                *ids.entry(k).or_insert(next)
            })
            .collect();
        Coloring { colors }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, i: usize) -> u32 {
        self.colors[i]
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn class_count(&self) -> usize {
        let mut seen: Vec<u32> = self.colors.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Classes as ascending index lists, ordered by smallest member.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut by_color: HashMap<u32, usize> = HashMap::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (i, &c) in self.colors.iter().enumerate() {
            let slot = *by_color.entry(c).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[slot].push(i);
        }
        classes
    }

    /// The same partition with colors renumbered in first-appearance order.
    pub fn normalized(&self) -> Coloring {
        Coloring::from_keys(self.colors.iter().copied())
    }

    /// Applies an index permutation: entry `i` moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Coloring {
        let mut colors = vec![0; self.colors.len()];
        for (i, &c) in self.colors.iter().enumerate() {
            colors[perm[i]] = c;
        }
        Coloring { colors }
    }
}

/// True iff equal colors under `a` imply equal colors under `b`.
pub fn refines(a: &Coloring, b: &Coloring) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "colorings cover {} and {} indices",
            a.len(),
            b.len()
        )));
    }
    let mut induced: HashMap<u32, u32> = HashMap::new();
    for (&ca, &cb) in a.colors.iter().zip(&b.colors) {
        if *induced.entry(ca).or_insert(cb) != cb {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn equivalent(a: &Coloring, b: &Coloring) -> Result<bool> {
    Ok(refines(a, b)? && refines(b, a)?)
}

/// Which past iteration the update reads its own color from: `f(t) ≤ t`,
/// non-decreasing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum HistoryFunction {
    #[default]
    Identity,
    Zero,
    /// `f(t) = table[t]` inside the table and `f(t) = t` beyond it.
    Table(Vec<usize>),
}

impl HistoryFunction {
    pub fn table(values: Vec<usize>) -> Result<Self> {
        for (t, &ft) in values.iter().enumerate() {
            if ft > t {
                return Err(Error::Validation(format!(
                    "history function has f({t}) = {ft} > {t}"
                )));
            }
            if t > 0 && ft < values[t - 1] {
                return Err(Error::Validation(format!(
                    "history function decreases at t = {t}"
                )));
            }
        }
        Ok(HistoryFunction::Table(values))
    }

    pub fn apply(&self, t: usize) -> usize {
        match self {
            HistoryFunction::Identity => t,
            HistoryFunction::Zero => 0,
            HistoryFunction::Table(v) => v.get(t).copied().unwrap_or(t),
        }
    }

    /// Parses `id`, `zero`, or a comma/whitespace separated table.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "id" | "identity" => Ok(HistoryFunction::Identity),
            "zero" | "0" => Ok(HistoryFunction::Zero),
            other => {
                let values = other
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<usize>().map_err(|_| {
                            Error::Validation(format!("bad history table entry `{s}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::table(values)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestId {
    Rwl1,
    Rwl2,
    Rawl2,
    Rwl2Plus,
    Rawl2Plus,
}

impl TestId {
    pub const ALL: [TestId; 5] = [
        TestId::Rwl1,
        TestId::Rwl2,
        TestId::Rawl2,
        TestId::Rwl2Plus,
        TestId::Rawl2Plus,
    ];

    pub fn arity(self) -> usize {
        match self {
            TestId::Rwl1 => 1,
            _ => 2,
        }
    }

    pub fn augmented(self) -> bool {
        matches!(self, TestId::Rwl2Plus | TestId::Rawl2Plus)
    }

    pub fn name(self) -> &'static str {
        match self {
            TestId::Rwl1 => "rwl1",
            TestId::Rwl2 => "rwl2",
            TestId::Rawl2 => "rawl2",
            TestId::Rwl2Plus => "rwl2+",
            TestId::Rawl2Plus => "rawl2+",
        }
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::lookup("test", s))
    }
}
