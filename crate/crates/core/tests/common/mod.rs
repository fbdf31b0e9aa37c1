#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use relwl::corpus::{random_kg_with, rng, PairColorMode, RandomGraphConfig};
use relwl::kg::KnowledgeGraph;
use relwl::wl::HistoryFunction;

pub fn graph(seed: u64, n_max: usize, r_max: usize, pairs: PairColorMode) -> KnowledgeGraph {
    let mut r = rng(seed);
    random_kg_with(
        &mut r,
        &RandomGraphConfig {
            n_max,
            r_max,
            density: 0.3,
            node_colors: 1 + (seed % 3) as usize,
            pair_colors: pairs,
            ..Default::default()
        },
    )
}

pub fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng(seed ^ 0x5eed));
    p
}

/// Equal entries in `a` exactly where equal entries in `b`.
pub fn same_partition<A: PartialEq, B: PartialEq>(a: &[A], b: &[B]) -> bool {
    assert_eq!(a.len(), b.len());
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

pub fn finer<A: PartialEq, B: PartialEq>(a: &[A], b: &[B]) -> bool {
    assert_eq!(a.len(), b.len());
    (0..a.len()).all(|i| (0..a.len()).all(|j| a[i] != a[j] || b[i] == b[j]))
}

fn compress(sigs: Vec<String>) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    for s in &sigs {
        let k = ids.len();
        ids.entry(s.clone()).or_insert(k);
    }
    sigs.iter().map(|s| ids[s]).collect()
}

/// Incoming `(relation, source)` lists by brute force over the fact list.
fn incoming(g: &KnowledgeGraph) -> Vec<Vec<(usize, usize)>> {
    let mut inc = vec![Vec::new(); g.node_count()];
    for f in g.facts() {
        inc[f.target].push((f.relation, f.source));
    }
    inc
}

/// Reference relational color refinement with history `f`; colors per
/// iteration `0..=t`.
pub fn naive_rwl1(g: &KnowledgeGraph, f: &HistoryFunction, t: usize) -> Vec<Vec<usize>> {
    let inc = incoming(g);
    let mut out = vec![compress(
        (0..g.node_count()).map(|v| g.node_color_label(v).to_string()).collect(),
    )];
    for s in 0..t {
        let cur = &out[s];
        let own = &out[f.apply(s)];
        let sigs = (0..g.node_count())
            .map(|v| {
                let mut m: Vec<(usize, usize)> = inc[v].iter().map(|&(r, w)| (cur[w], r)).collect();
                m.sort();
                format!("{}|{m:?}", own[v])
            })
            .collect();
        out.push(compress(sigs));
    }
    out
}

/// Reference pairwise refinement: `rawl2` when `symmetric` is false,
/// otherwise `rwl2`.
pub fn naive_pairs(g: &KnowledgeGraph, t: usize, symmetric: bool) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let inc = incoming(g);
    let pc = g.pair_coloring().expect("pair coloring");
    let mut out = vec![compress(
        (0..n * n).map(|i| pc.label(i / n, i % n).to_string()).collect(),
    )];
    for s in 0..t {
        let c = &out[s];
        let sigs = (0..n * n)
            .map(|i| {
                let (u, v) = (i / n, i % n);
                let mut right: Vec<(usize, usize)> =
                    inc[v].iter().map(|&(r, w)| (c[u * n + w], r)).collect();
                right.sort();
                let mut left: Vec<(usize, usize)> = if symmetric {
                    inc[u].iter().map(|&(r, w)| (c[w * n + v], r)).collect()
                } else {
                    Vec::new()
                };
                left.sort();
                format!("{}|{right:?}|{left:?}", c[i])
            })
            .collect();
        out.push(compress(sigs));
    }
    out
}

pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}
