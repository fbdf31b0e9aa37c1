use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kg::{default_pair_coloring, KnowledgeGraph, PairColoring, PairColoringMode};
use crate::logic::Expr;
use crate::wl::HistoryFunction;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairColorMode {
    None,
    Diagonal,
    ColoredDiagonal,
    /// Uniform random labels out of `k`; usually lacks target node
    /// distinguishability.
    Random(usize),
}

#[derive(Clone, Debug)]
pub struct RandomGraphConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub r_max: usize,
    pub density: f64,
    /// `1` gives the uniform coloring.
    pub node_colors: usize,
    pub pair_colors: PairColorMode,
    /// Only facts `r(u, v)` with `u < v`.
    pub acyclic: bool,
}

impl Default for RandomGraphConfig {
    fn default() -> Self {
        RandomGraphConfig {
            n_min: 1,
            n_max: 6,
            r_max: 2,
            density: 0.3,
            node_colors: 1,
            pair_colors: PairColorMode::None,
            acyclic: false,
        }
    }
}

/// Uniform node count in `1..=n_max`, relation count in `1..=r_max`; each
/// possible fact is present with probability `density`.
pub fn random_kg(seed: u64, n_max: usize, r_max: usize, density: f64) -> KnowledgeGraph {
    random_kg_with(
        &mut rng(seed),
        &RandomGraphConfig {
            n_max,
            r_max,
            density,
            ..Default::default()
        },
    )
}

pub fn random_kg_with<R: Rng>(rng: &mut R, cfg: &RandomGraphConfig) -> KnowledgeGraph {
    let n = rng.random_range(cfg.n_min.max(1).min(cfg.n_max)..=cfg.n_max.max(1));
    let rels = rng.random_range(1..=cfg.r_max.max(1));
    let density = cfg.density.clamp(0.0, 1.0);
    let mut b = KnowledgeGraph::builder();
    for v in 0..n {
        b.add_node(&format!("n{v}"));
    }
    for r in 0..rels {
        b.add_relation(&format!("r{r}"));
    }
    for r in 0..rels {
        for u in 0..n {
            for v in 0..n {
                if cfg.acyclic && u >= v {
                    continue;
                }
                if rng.random_bool(density) {
                    b.add_fact_ids(r, u, v);
                }
            }
        }
    }
    let mut g = b.build();
    if cfg.node_colors > 1 {
        let labels: Vec<String> = (0..n)
            .map(|_| format!("c{}", rng.random_range(0..cfg.node_colors)))
            .collect();
        g = g.with_node_labels(&labels).expect("one label per node");
    }
    let pc = match cfg.pair_colors {
        PairColorMode::None => None,
        PairColorMode::Diagonal => Some(default_pair_coloring(&g, PairColoringMode::Diagonal)),
        PairColorMode::ColoredDiagonal => {
            Some(default_pair_coloring(&g, PairColoringMode::ColoredDiagonal))
        }
        PairColorMode::Random(k) => Some(PairColoring::from_fn(n, |_, _| {
            format!("p{}", rng.random_range(0..k.max(1)))
        })),
    };
    match pc {
        Some(pc) => g.with_pair_coloring(pc).expect("sizes agree"),
        None => g,
    }
}

/// A random valid history table of length `len`.
pub fn random_history<R: Rng>(rng: &mut R, len: usize) -> HistoryFunction {
    let mut table = Vec::with_capacity(len);
    let mut prev = 0;
    for t in 0..len {
        prev = rng.random_range(prev..=t);
        table.push(prev);
    }
    HistoryFunction::table(table).expect("non-decreasing and bounded by t")
}

#[derive(Clone, Debug)]
pub struct FormulaConfig {
    pub max_depth: usize,
    pub max_count: u32,
    pub atoms: Vec<String>,
    pub relations: Vec<String>,
    /// Leave out negation, for monotonicity checks.
    pub positive: bool,
}

pub fn random_formula<R: Rng>(rng: &mut R, cfg: &FormulaConfig) -> Expr {
    let depth = rng.random_range(0..=cfg.max_depth);
    build(rng, cfg, depth)
}

fn build<R: Rng>(rng: &mut R, cfg: &FormulaConfig, depth: usize) -> Expr {
    let atom = |rng: &mut R| Expr::Atom(cfg.atoms.choose(rng).expect("non-empty atoms").clone());
    if depth == 0 {
        return atom(rng);
    }
    let choices: &[u8] = match (cfg.positive, cfg.relations.is_empty()) {
        (false, false) => &[0, 1, 2],
        (false, true) => &[0, 1],
        (true, false) => &[1, 2],
        (true, true) => &[1],
    };
    match choices.choose(rng).expect("non-empty") {
        0 => Expr::not(build(rng, cfg, depth - 1)),
        1 => {
            let other = rng.random_range(0..depth);
            let (a, b) = if rng.random_bool(0.5) {
                (build(rng, cfg, depth - 1), build(rng, cfg, other))
            } else {
                (build(rng, cfg, other), build(rng, cfg, depth - 1))
            };
            Expr::and(a, b)
        }
        _ => Expr::exists(
            rng.random_range(1..=cfg.max_count.max(1)),
            cfg.relations.choose(rng).expect("non-empty relations"),
            build(rng, cfg, depth - 1),
        ),
    }
}
